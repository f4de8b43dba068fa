"""Tag-language identification.

Two deterministic signals, in order:

1. script detection for non-Latin writing systems (CJK, Hangul, Arabic,
   Hebrew, Cyrillic, Greek, Devanagari, Thai);
2. word lookup against per-language lexicons of high-frequency words for
   Latin-script languages.

Tags that neither signal identifies inherit the strict majority language of
the identifiable tags in the same list (Flickr tag lists are single-author,
so languages cohere); failing that they emit the 'und' code. The identifier
and its decision rule are recorded in the extractor manifest.
"""

from __future__ import annotations

import re
import unicodedata
from functools import lru_cache
from importlib import resources as importlib_resources

UNDETERMINED = "und"
IDENTIFIER_NAME = "builtin-lexicon-v1"

_SCRIPT_RANGES = (
    ((0x3040, 0x30FF), "ja"),   # hiragana + katakana
    ((0xAC00, 0xD7AF), "ko"),   # hangul syllables
    ((0x4E00, 0x9FFF), "zh"),   # CJK unified (claimed by zh unless kana present)
    ((0x0600, 0x06FF), "ar"),
    ((0x0590, 0x05FF), "he"),
    ((0x0400, 0x04FF), "ru"),
    ((0x0370, 0x03FF), "el"),
    ((0x0900, 0x097F), "hi"),   # devanagari
    ((0x0E00, 0x0E7F), "th"),
)

_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


@lru_cache(maxsize=None)
def _lexicons() -> dict[str, frozenset[str]]:
    out: dict[str, frozenset[str]] = {}
    base = importlib_resources.files("datasetlens_extractor") / "lexicons"
    for entry in sorted(base.iterdir(), key=lambda e: e.name):
        if not entry.name.endswith(".txt"):
            continue
        code = entry.name[:-4]
        words = frozenset(
            line.strip().lower()
            for line in entry.read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
        out[code] = words
    return out


def _script_language(text: str) -> str | None:
    has_kana = any(0x3040 <= ord(ch) <= 0x30FF for ch in text)
    for ch in text:
        point = ord(ch)
        for (lo, hi), code in _SCRIPT_RANGES:
            if lo <= point <= hi:
                if code == "zh" and has_kana:
                    return "ja"
                return code
    return None


def _strip_accents(word: str) -> str:
    decomposed = unicodedata.normalize("NFD", word)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def identify(text: str) -> str:
    """Language code for one tag (or short phrase); 'und' when unsure."""
    text = text.strip()
    if not text:
        return UNDETERMINED
    script = _script_language(text)
    if script is not None:
        return script
    words = [w.lower() for w in _WORD_RE.findall(text)]
    if not words:
        return UNDETERMINED
    votes: dict[str, float] = {}
    for word in words:
        candidates = [
            code for code, lexicon in _lexicons().items()
            if word in lexicon or _strip_accents(word) in lexicon
        ]
        for code in candidates:
            votes[code] = votes.get(code, 0.0) + 1.0 / len(candidates)
    if not votes:
        return UNDETERMINED
    top = max(votes.values())
    winners = sorted(c for c, v in votes.items() if v == top)
    if len(winners) > 1 or top / len(words) < 0.5:
        return UNDETERMINED
    return winners[0]


def identify_tags(tags: list[str]) -> list[str]:
    """Per-tag codes aligned with the input list.

    Unidentified tags inherit the strict majority language of the identified
    ones; if nothing in the list is identifiable, everything is 'und'.
    """
    raw = [identify(tag) for tag in tags]
    known = [c for c in raw if c != UNDETERMINED]
    if not known:
        return raw
    counts: dict[str, int] = {}
    for code in known:
        counts[code] = counts.get(code, 0) + 1
    ranked = sorted(counts.items(), key=lambda t: (-t[1], t[0]))
    majority = ranked[0][0] if (len(ranked) == 1 or ranked[0][1] > ranked[1][1]) else None
    if majority is None:
        return raw
    return [majority if c == UNDETERMINED else c for c in raw]

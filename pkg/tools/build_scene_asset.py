#!/usr/bin/env python3
"""Build assets/scene_hierarchy.json: scene name -> one of 16 scene groups.

The grouping follows the two-tier scene hierarchy convention (indoor groups
and outdoor groups); the file is the single source of truth shared by the
engine and the extractor. Run from the repo root:

    python tools/build_scene_asset.py
"""

import json
from pathlib import Path

GROUPS: dict[str, list[str]] = {
    # ---- indoor -----------------------------------------------------------
    "shopping and dining": [
        "bakery/shop", "banquet_hall", "bar", "bazaar/indoor", "beauty_salon",
        "beer_hall", "bookstore", "booth/indoor", "butchers_shop", "cafeteria",
        "candy_store", "clothing_store", "coffee_shop", "delicatessen",
        "department_store", "dining_hall", "dining_room", "drugstore",
        "fabric_store", "fastfood_restaurant", "flea_market/indoor",
        "florist_shop/indoor", "food_court", "general_store/indoor",
        "gift_shop", "hardware_store", "ice_cream_parlor", "jewelry_shop",
        "laundromat", "market/indoor", "pet_shop", "pharmacy", "pizzeria",
        "pub/indoor", "restaurant", "shoe_shop", "shopping_mall/indoor",
        "supermarket", "sushi_bar", "toyshop", "wet_bar",
    ],
    "workplace": [
        "archive", "assembly_line", "auto_factory", "auto_showroom",
        "bank_vault", "biology_laboratory", "chemistry_lab", "clean_room",
        "computer_room", "engine_room", "home_office", "hospital",
        "hospital_room", "nursing_home", "office", "office_cubicles",
        "operating_room", "physics_laboratory", "reception", "repair_shop",
        "restaurant_kitchen", "server_room", "television_studio",
        "veterinarians_office", "waiting_room",
    ],
    "home or hotel": [
        "alcove", "artists_loft", "attic", "balcony/interior", "basement",
        "bathroom", "bedchamber", "bedroom", "berth", "bow_window/indoor",
        "childs_room", "closet", "corridor", "dorm_room", "dressing_room",
        "elevator/door", "elevator_lobby", "elevator_shaft", "entrance_hall",
        "galley", "garage/indoor", "home_theater", "hotel_room", "jacuzzi/indoor",
        "kitchen", "living_room", "lobby", "mezzanine", "nursery", "pantry",
        "playroom", "porch", "recreation_room", "shower", "staircase",
        "storage_room", "television_room", "utility_room", "youth_hostel",
    ],
    "indoor transportation": [
        "airplane_cabin", "airport_terminal", "bus_interior",
        "bus_station/indoor", "car_interior", "cockpit",
        "subway_station/platform", "ticket_booth", "train_interior",
        "train_station/platform",
    ],
    "indoor sports and leisure": [
        "amusement_arcade", "arena/hockey", "arena/performance", "ball_pit",
        "ballroom", "basketball_court/indoor", "bowling_alley", "boxing_ring",
        "discotheque", "escalator/indoor", "gymnasium/indoor",
        "ice_skating_rink/indoor", "locker_room", "martial_arts_gym",
        "sauna", "stage/indoor", "swimming_pool/indoor",
    ],
    "indoor cultural": [
        "aquarium", "art_gallery", "art_school", "art_studio", "atrium/public",
        "auditorium", "burial_chamber", "catacomb", "church/indoor",
        "classroom", "conference_center", "conference_room", "courthouse",
        "jail_cell", "kindergarden_classroom", "lecture_room",
        "legislative_chamber", "library/indoor", "movie_theater/indoor",
        "museum/indoor", "music_studio", "natural_history_museum",
        "orchestra_pit", "science_museum", "throne_room",
    ],
    # ---- outdoor ----------------------------------------------------------
    "water, ice, snow": [
        "beach", "boat_deck", "boathouse", "canal/natural", "coast", "creek",
        "crevasse", "dam", "fishpond", "glacier", "grotto", "harbor",
        "hot_spring", "ice_floe", "ice_shelf", "iceberg", "igloo", "islet",
        "lagoon", "lake/natural", "moat/water", "ocean", "pier", "pond",
        "raft", "river", "ski_resort", "ski_slope", "snowfield",
        "swimming_hole", "swimming_pool/outdoor", "underwater/ocean_deep",
        "water_park", "waterfall", "watering_hole", "wave",
    ],
    "mountains, desert, sky": [
        "badlands", "butte", "canyon", "cliff", "desert/sand",
        "desert/vegetation", "desert_road", "mountain", "mountain_path",
        "mountain_snowy", "rock_arch", "sky", "tundra", "valley", "volcano",
    ],
    "forest, field, jungle": [
        "bamboo_forest", "campsite", "corn_field", "field/cultivated",
        "field/wild", "field_road", "forest/broadleaf", "forest_path",
        "forest_road", "hayfield", "marsh", "orchard", "pasture", "rainforest",
        "rice_paddy", "swamp", "tree_farm", "trench", "vineyard", "wheat_field",
    ],
    "man-made elements": [
        "aqueduct", "arch", "barndoor", "beer_garden", "bridge",
        "building_facade", "doorway/outdoor", "fire_escape", "fountain",
        "gazebo/exterior", "lighthouse", "pavilion", "phone_booth",
        "rope_bridge", "tower", "water_tower", "wind_farm",
        "windmill",
    ],
    "outdoor transportation": [
        "airfield", "alley", "canal/urban", "crosswalk", "gas_station",
        "hangar/indoor", "hangar/outdoor", "heliport", "highway",
        "landing_deck", "loading_dock", "oilrig", "parking_garage/indoor",
        "parking_garage/outdoor", "parking_lot", "raceway", "railroad_track",
        "runway", "street", "viaduct",
    ],
    "historical building": [
        "amphitheater", "archaelogical_excavation", "castle", "cemetery",
        "church/outdoor", "embassy", "kasbah", "library/outdoor", "mausoleum",
        "medina", "mosque/outdoor", "museum/outdoor", "pagoda", "palace",
        "ruin", "synagogue/outdoor", "temple/asia",
    ],
    "outdoor sports fields, parks": [
        "amusement_park", "athletic_field/outdoor", "baseball_field",
        "botanical_garden", "bullring", "carrousel", "corral", "football_field", "formal_garden", "golf_course", "ice_skating_rink/outdoor",
        "japanese_garden", "lawn", "park", "picnic_area", "playground",
        "racecourse", "roof_garden", "sandbox", "soccer_field",
        "stadium/baseball", "stadium/football", "stadium/soccer",
        "stage/outdoor", "topiary_garden", "volleyball_court/outdoor",
        "zen_garden",
    ],
    "industrial and construction": [
        "construction_site", "excavation", "industrial_area", "junkyard",
        "landfill", "lock_chamber", "military_base", "quarry", "slum",
        "water_treatment_plant",
    ],
    "houses, cabins, gardens": [
        "apartment_building/outdoor", "balcony/exterior", "barn", "beach_house",
        "cabin/outdoor", "chalet", "cottage", "courtyard", "driveway", "farm",
        "greenhouse/indoor", "greenhouse/outdoor", "house",
        "hunting_lodge/outdoor", "inn/outdoor", "kennel/outdoor", "mansion",
        "manufactured_home", "motel", "oast_house", "patio",
        "residential_neighborhood", "shed", "stable", "tree_house",
        "vegetable_garden", "yard",
    ],
    "commercial buildings, shops, markets": [
        "arcade", "army_base", "bazaar/outdoor", "boardwalk", "campus",
        "diner/outdoor", "downtown", "fire_station", "general_store/outdoor",
        "hotel/outdoor", "market/outdoor", "plaza", "promenade",
        "restaurant_patio", "schoolhouse", "shopfront", "skyscraper",
        "village",
    ],
}


def main() -> None:
    mapping: dict[str, str] = {}
    for group, scenes in GROUPS.items():
        for scene in scenes:
            if scene in mapping:
                raise SystemExit(f"duplicate scene {scene!r} in {group!r} and {mapping[scene]!r}")
            mapping[scene] = group
    print(f"groups: {len(GROUPS)}  scenes: {len(mapping)}")
    if len(GROUPS) != 16:
        raise SystemExit("expected exactly 16 groups")
    out = Path("src/datasetlens/assets/scene_hierarchy.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(dict(sorted(mapping.items())), indent=1) + "\n")
    print(f"wrote {out} ({len(mapping)} scenes)")


if __name__ == "__main__":
    main()

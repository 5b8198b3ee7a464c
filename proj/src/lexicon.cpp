#include "navsec/lexicon.hpp"

#include <algorithm>
#include <array>

namespace navsec {
namespace {

constexpr std::array<std::string_view, 195> kLandmarks = {
    "bakery",
    "fountain",
    "museum",
    "library",
    "pharmacy",
    "cafe",
    "bank",
    "church",
    "school",
    "hospital",
    "hotel",
    "theater",
    "cinema",
    "park",
    "statue",
    "tower",
    "bridge",
    "market",
    "station",
    "stadium",
    "gallery",
    "bookstore",
    "florist",
    "butcher",
    "barber",
    "pub",
    "pizzeria",
    "diner",
    "bistro",
    "deli",
    "grocery",
    "laundromat",
    "gym",
    "zoo",
    "aquarium",
    "courthouse",
    "firehouse",
    "bakeshop",
    "chapel",
    "mosque",
    "temple",
    "synagogue",
    "cathedral",
    "monument",
    "obelisk",
    "lighthouse",
    "windmill",
    "clocktower",
    "arcade",
    "casino",
    "boutique",
    "pawnshop",
    "jeweler",
    "tailor",
    "cobbler",
    "locksmith",
    "hardware",
    "garage",
    "carwash",
    "gasstation",
    "motel",
    "hostel",
    "inn",
    "tavern",
    "brewery",
    "winery",
    "distillery",
    "creamery",
    "icecream",
    "donutshop",
    "teahouse",
    "noodlebar",
    "sushibar",
    "steakhouse",
    "taqueria",
    "bagelshop",
    "pretzelstand",
    "foodtruck",
    "newsstand",
    "kiosk",
    "postoffice",
    "cityhall",
    "townhall",
    "embassy",
    "consulate",
    "university",
    "college",
    "kindergarten",
    "daycare",
    "clinic",
    "dentist",
    "veterinarian",
    "optician",
    "spa",
    "salon",
    "nailsalon",
    "tattooparlor",
    "musicstore",
    "recordshop",
    "pianoshop",
    "toystore",
    "candystore",
    "chocolatier",
    "cheeseshop",
    "fishmarket",
    "greengrocer",
    "farmstand",
    "nursery",
    "greenhouse",
    "arboretum",
    "botanicalgarden",
    "playground",
    "skatepark",
    "basketballcourt",
    "tenniscourt",
    "bowlingalley",
    "icerink",
    "swimmingpool",
    "racetrack",
    "velodrome",
    "observatory",
    "planetarium",
    "sciencecenter",
    "conventioncenter",
    "operahouse",
    "concerthall",
    "amphitheater",
    "bandstand",
    "gazebo",
    "pavilion",
    "pier",
    "marina",
    "boathouse",
    "ferryterminal",
    "busdepot",
    "tramstop",
    "subwayentrance",
    "taxistand",
    "parkinglot",
    "bikeshop",
    "scooterrental",
    "hardwarestore",
    "lumberyard",
    "furniturestore",
    "antiquestore",
    "thriftstore",
    "departmentstore",
    "mall",
    "supermarket",
    "warehouse",
    "factory",
    "printshop",
    "copyshop",
    "photostudio",
    "artstudio",
    "pottery",
    "glassworks",
    "foundry",
    "sawmill",
    "granary",
    "silo",
    "watertower",
    "radiotower",
    "billboard",
    "mural",
    "fountainhead",
    "wishingwell",
    "archway",
    "gatehouse",
    "turret",
    "bastion",
    "fortress",
    "castle",
    "palace",
    "manor",
    "villa",
    "cottage",
    "farmhouse",
    "barn",
    "stable",
    "kennel",
    "aviary",
    "petstore",
    "fireworks",
    "laundry",
    "drycleaner",
    "pawnbroker",
    "bookbinder",
    "stationer",
    "hatter",
    "cutler",
    "chandler",
    "apothecary",
    "herbalist",
    "cartographer",
};

}  // namespace

std::span<const std::string_view> landmark_lexicon() noexcept { return kLandmarks; }

std::optional<int> landmark_id(std::string_view name) noexcept {
  const auto it = std::find(kLandmarks.begin(), kLandmarks.end(), name);
  if (it == kLandmarks.end()) return std::nullopt;
  return static_cast<int>(it - kLandmarks.begin());
}

}  // namespace navsec

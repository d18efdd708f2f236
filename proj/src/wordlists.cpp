#include "lcrr/wordlists.hpp"

namespace lcrr::wordlists {

std::span<const std::string_view> filler_words() {
  static constexpr std::string_view kWords[] = {
      "time", "year", "people", "way", "day", "man", "thing", "woman", "life",
      "child", "world", "school", "state", "family", "student", "group",
      "country", "problem", "hand", "part", "place", "case", "week", "company",
      "system", "program", "question", "work", "government", "number", "night",
      "point", "home", "water", "room", "mother", "area", "money", "story",
      "fact", "month", "lot", "right", "study", "book", "eye", "job", "word",
      "business", "issue", "side", "kind", "head", "house", "service", "friend",
      "father", "power", "hour", "game", "line", "end", "member", "law", "car",
      "city", "community", "name", "president", "team", "minute", "idea", "kid",
      "body", "information", "back", "parent", "face", "others", "level",
      "office", "door", "health", "person", "art", "war", "history", "party",
      "result", "change", "morning", "reason", "research", "girl", "guy",
      "moment", "air", "teacher", "force", "education", "foot", "boy", "age",
      "policy", "process", "music", "market", "sense", "nation", "plan",
      "college", "interest", "death", "experience", "effect", "use", "class",
      "control", "care", "field", "development", "role", "effort", "rate",
      "heart", "drug", "show", "leader", "light", "voice", "wife", "police",
      "mind", "price", "report", "decision", "son", "view", "relationship",
      "town", "road", "arm", "difference", "value", "building", "action",
      "model", "season", "society", "tax", "director", "position", "player",
      "record", "paper", "space", "ground", "form", "event", "official",
      "matter", "center", "couple", "site", "project", "activity", "star",
      "table", "need", "court", "oil", "situation", "cost", "industry",
      "figure", "street", "image", "phone", "data", "picture", "practice",
      "piece", "land", "product", "doctor", "wall", "patient", "worker", "news",
      "test", "movie", "north", "love", "support", "technology", "step", "baby",
      "computer", "type", "attention", "film", "tree", "source", "organization",
      "hair", "window", "evidence", "population", "truth", "song", "river",
      "garden", "village", "bridge", "harbor", "meadow", "forest", "valley",
      "mountain", "island", "ocean", "desert", "letter", "evening", "journey",
      "painter", "writer", "farmer", "sailor", "builder", "engineer", "careful",
      "quiet", "bright", "early", "late", "simple", "strong", "gentle",
      "narrow", "broad", "distant", "modern", "ancient", "common", "rare",
      "ordinary", "steady", "slow", "rapid", "warm", "cold", "green", "silver",
      "golden", "wooden", "stone", "open", "closed", "walked", "carried",
      "noticed", "remembered", "described", "followed", "considered",
      "wondered", "explained", "listened", "watched", "opened", "gathered",
      "traveled", "returned", "discovered", "finished", "started", "believed",
      "offered", "received", "shared", "changed", "reached", "turned", "moved",
      "often", "always", "never", "sometimes", "rarely", "quickly", "slowly",
      "quietly", "openly", "together", "alone", "again", "almost", "nearly",
      "perhaps", "indeed", "still",
  };
  return kWords;
}

std::span<const std::string_view> needle_keys() {
  static constexpr std::string_view kWords[] = {
      "apple", "banana", "cherry", "grape", "lemon", "mango", "melon", "olive",
      "peach", "pear", "plum", "berry", "orange", "lime", "apricot", "coconut",
      "papaya", "guava", "kiwi", "fig", "walnut", "almond", "cashew", "peanut",
      "pepper", "onion", "garlic", "ginger", "carrot", "potato", "tomato",
      "cabbage", "lettuce", "spinach", "celery", "radish", "turnip", "pumpkin",
      "squash", "zucchini", "eggplant", "broccoli", "cucumber", "avocado",
      "tiger", "lion", "zebra", "giraffe", "monkey", "rabbit", "turtle",
      "dolphin", "whale", "shark", "eagle", "falcon", "parrot", "pigeon",
      "sparrow", "robin", "owl", "swan", "goose", "duck", "penguin", "beaver",
      "badger", "otter", "ferret", "weasel", "hamster", "squirrel", "chipmunk",
      "moose", "elk", "bison", "camel", "llama", "alpaca", "donkey", "horse",
      "pony", "mule", "goat", "sheep", "lamb", "pig", "cow", "bull", "ox",
      "yak", "buffalo", "panther", "leopard", "cheetah", "jaguar", "cougar",
      "lynx", "bobcat", "coyote", "wolf", "fox", "jackal", "hyena", "raccoon",
      "possum", "skunk", "koala", "kangaroo", "wombat", "platypus", "lizard",
      "gecko", "iguana", "cobra", "python", "viper", "frog", "toad",
      "salamander", "newt", "beetle", "spider", "ant", "bee", "wasp", "hornet",
      "moth", "butterfly", "dragonfly", "cricket", "grasshopper", "ladybug",
      "mosquito", "scorpion", "crab", "lobster", "shrimp", "oyster", "clam",
      "mussel", "squid", "octopus", "jellyfish", "starfish", "seahorse",
      "salmon", "trout", "tuna", "cod", "herring", "sardine", "anchovy",
      "piano", "violin", "guitar", "trumpet", "flute", "clarinet", "drum",
      "harp", "cello", "banjo", "ukulele", "saxophone", "trombone", "tuba",
      "oboe", "bassoon", "accordion", "harmonica", "xylophone", "tambourine",
      "hammer", "wrench", "chisel", "shovel", "rake", "ladder", "bucket",
      "basket", "blanket", "pillow", "lantern", "candle", "compass", "anchor",
      "helmet", "jacket", "sweater", "scarf", "mitten", "boot", "sandal",
      "slipper", "umbrella", "wallet", "pencil", "crayon", "marker", "eraser",
      "stapler", "scissors", "ruler", "notebook", "envelope", "stamp", "ribbon",
      "button", "zipper", "needle", "thimble", "spoon", "fork", "ladle",
      "kettle", "teapot", "skillet", "blender", "toaster", "oven", "freezer",
      "sofa", "cushion", "carpet", "curtain", "mirror", "cabinet", "drawer",
      "shelf", "bench", "stool", "hammock", "tent", "canoe", "kayak",
      "sailboat", "bicycle", "scooter", "tractor", "wagon", "trolley", "rocket",
      "satellite", "telescope", "microscope", "magnet", "battery", "cable",
      "antenna", "radar", "crystal", "diamond", "emerald", "ruby", "sapphire",
      "topaz", "pearl", "opal", "amber", "granite", "marble", "quartz",
      "cobalt", "copper", "bronze", "nickel", "zinc", "tin", "platinum",
      "velvet", "cotton", "linen", "silk", "wool", "denim", "leather", "canvas",
  };
  return kWords;
}

}  // namespace lcrr::wordlists

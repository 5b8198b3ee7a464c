#include "navsec/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "navsec/error.hpp"

namespace navsec {
namespace {

constexpr char kMagic[8] = {'N', 'A', 'V', 'S', 'E', 'C', '0', '1'};

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string(what) + ": " + e.what());
  }
}

Action action_from(const json& j) {
  const auto a = parse_action(j.get<std::string>());
  if (!a) throw Error(ErrorCode::CorruptFile, "unknown action " + j.dump());
  return *a;
}

template <typename E, typename Parse>
E enum_from(const json& j, Parse parse, const char* what) {
  const auto v = parse(j.get<std::string>());
  if (!v) throw Error(ErrorCode::CorruptFile, std::string("unknown ") + what + " " + j.dump());
  return *v;
}

std::optional<SpanKind> parse_span_kind(std::string_view s) {
  for (auto k : {SpanKind::TaskDescription, SpanKind::Instruction, SpanKind::Observation, SpanKind::Action,
                 SpanKind::Suffix, SpanKind::Defense}) {
    if (span_kind_name(k) == s) return k;
  }
  return std::nullopt;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  std::size_t at = 0;

  std::uint64_t take(int bytes) {
    if (at + static_cast<std::size_t>(bytes) > buf.size()) throw Error(ErrorCode::CorruptFile, "checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[at + i])) << (8 * i);
    at += static_cast<std::size_t>(bytes);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  std::uint64_t u64() { return take(8); }
};

constexpr std::array<std::string_view, 4> kModes = {"init", "teacher", "mixed", "adversarial"};

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

void check_schema(const json& j, const std::string& kind) {
  if (!j.is_object() || !j.contains("schema_version")) {
    throw Error(ErrorCode::SchemaMismatch, "missing schema_version" + (kind.empty() ? "" : " in " + kind));
  }
  if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kSchemaVersion) {
    throw Error(ErrorCode::SchemaMismatch, "unsupported schema_version " + j.at("schema_version").dump());
  }
  if (!kind.empty() && (!j.contains("kind") || j.at("kind") != kind)) {
    throw Error(ErrorCode::SchemaMismatch, "expected a " + kind + " document");
  }
}

json read_json_file(const std::string& path, const std::string& kind) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path + ": " + e.what());
  }
  check_schema(j, kind);
  return j;
}

void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

json world_to_json(const NavGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    nodes.push_back({{"id", n.id}, {"x", n.pos.x}, {"y", n.pos.y}, {"landmarks", n.landmarks}, {"hazard", n.hazard}});
  }
  json edges = json::array();
  for (auto [a, b] : g.edges) edges.push_back({a, b});
  return {{"schema_version", kSchemaVersion}, {"kind", "world"}, {"id", g.id},
          {"seed", g.seed}, {"nodes", nodes}, {"edges", edges}};
}

NavGraph world_from_json(const json& j) {
  check_schema(j, "world");
  return guarded("world", [&] {
    NavGraph g;
    g.id = j.at("id").get<std::string>();
    g.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& n : j.at("nodes")) {
      g.nodes.push_back({n.at("id").get<int>(), {n.at("x").get<double>(), n.at("y").get<double>()},
                         n.at("landmarks").get<std::vector<int>>(), n.at("hazard").get<bool>()});
    }
    for (const auto& e : j.at("edges")) g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    try {
      g.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptFile, e.what());
    }
    g.rebuild_adjacency();
    return g;
  });
}

json route_to_json(const RouteInstance& r) {
  json actions = json::array();
  for (Action a : r.gold_actions) actions.push_back(std::string(action_word(a)));
  return {{"id", r.id},
          {"graph_id", r.graph_id},
          {"start", {{"node", r.start.node}, {"hx", r.start.heading.x}, {"hy", r.start.heading.y}}},
          {"goal", r.goal},
          {"gold_nodes", r.gold_nodes},
          {"gold_actions", actions},
          {"key_point_indices", r.key_point_indices},
          {"landmark_plan", r.landmark_plan},
          {"instruction", r.instruction}};
}

RouteInstance route_from_json(const json& j) {
  return guarded("route", [&] {
    RouteInstance r;
    r.id = j.at("id").get<std::string>();
    r.graph_id = j.at("graph_id").get<std::string>();
    const auto& s = j.at("start");
    r.start = {s.at("node").get<int>(), {s.at("hx").get<double>(), s.at("hy").get<double>()}};
    r.goal = j.at("goal").get<int>();
    r.gold_nodes = j.at("gold_nodes").get<std::vector<int>>();
    for (const auto& a : j.at("gold_actions")) r.gold_actions.push_back(action_from(a));
    r.key_point_indices = j.at("key_point_indices").get<std::vector<int>>();
    r.landmark_plan = j.at("landmark_plan").get<std::vector<int>>();
    r.instruction = j.at("instruction").get<std::string>();
    return r;
  });
}

json routes_to_json(const std::vector<RouteInstance>& routes) {
  json arr = json::array();
  for (const auto& r : routes) arr.push_back(route_to_json(r));
  return {{"schema_version", kSchemaVersion}, {"kind", "routes"}, {"routes", arr}};
}

std::vector<RouteInstance> routes_from_json(const json& j) {
  check_schema(j, "routes");
  return guarded("routes", [&] {
    std::vector<RouteInstance> out;
    for (const auto& r : j.at("routes")) out.push_back(route_from_json(r));
    return out;
  });
}

json prompt_to_json(const Prompt& p) {
  json spans = json::array();
  for (const auto& s : p.spans) {
    spans.push_back({{"kind", std::string(span_kind_name(s.kind))}, {"step", s.step}, {"begin", s.begin},
                     {"end", s.end}, {"label", s.label}});
  }
  std::vector<int> cats;
  for (auto c : p.categories) cats.push_back(static_cast<int>(c));
  return {{"tokens", p.tokens}, {"spans", spans}, {"categories", cats}, {"vocab_digest", p.vocab_digest}};
}

Prompt prompt_from_json(const json& j) {
  return guarded("prompt", [&] {
    Prompt p;
    p.tokens = j.at("tokens").get<std::vector<int>>();
    for (const auto& s : j.at("spans")) {
      p.spans.push_back({enum_from<SpanKind>(s.at("kind"), parse_span_kind, "span kind"), s.at("step").get<int>(),
                         s.at("begin").get<int>(), s.at("end").get<int>(), s.at("label").get<std::string>()});
    }
    for (int c : j.at("categories").get<std::vector<int>>()) {
      if (c < 0 || c > 2) throw Error(ErrorCode::CorruptFile, "bad word category");
      p.categories.push_back(static_cast<WordCategory>(c));
    }
    p.vocab_digest = j.at("vocab_digest").get<std::uint64_t>();
    if (const auto defect = check_spans(p); !defect.empty()) throw Error(ErrorCode::CorruptFile, "prompt: " + defect);
    return p;
  });
}

json attack_config_to_json(const AttackConfig& c) {
  return {{"mode", std::string(attack_mode_name(c.mode))},
          {"suffix_len", c.suffix_len},
          {"iterations", c.iterations},
          {"k", c.k},
          {"batch", c.batch},
          {"insert_pos", std::string(insert_pos_name(c.insert_pos))},
          {"objective", std::string(objective_name(c.objective))},
          {"target", std::string(action_word(c.target))},
          {"category_filter", std::string(category_filter_name(c.category_filter))},
          {"seed", c.seed},
          {"filler", c.filler}};
}

AttackConfig attack_config_from_json(const json& j, const AttackConfig& base) {
  AttackConfig c = base;
  auto bad = [](const std::string& key) { return Error(ErrorCode::ConfigError, "invalid attack setting '" + key + "'"); };
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "mode") {
        c.mode = parse_attack_mode(v.get<std::string>()).value_or(static_cast<AttackMode>(-1));
        if (c.mode != AttackMode::NPI && c.mode != AttackMode::NPS) throw bad(key);
      } else if (key == "suffix_len") {
        c.suffix_len = v.get<int>();
      } else if (key == "iterations") {
        c.iterations = v.get<int>();
      } else if (key == "k") {
        c.k = v.get<int>();
      } else if (key == "batch") {
        c.batch = v.get<int>();
      } else if (key == "insert_pos") {
        const auto p = parse_insert_pos(v.get<std::string>());
        if (!p) throw bad(key);
        c.insert_pos = *p;
      } else if (key == "objective") {
        const auto o = parse_objective(v.get<std::string>());
        if (!o) throw bad(key);
        c.objective = *o;
      } else if (key == "target") {
        const auto a = parse_action(v.get<std::string>());
        if (!a) throw bad(key);
        c.target = *a;
      } else if (key == "category_filter") {
        const auto f = parse_category_filter(v.get<std::string>());
        if (!f) throw bad(key);
        c.category_filter = *f;
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "filler") {
        c.filler = v.get<int>();
      } else {
        throw Error(ErrorCode::ConfigError, "unknown attack setting '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("attack settings: ") + e.what());
  }
  return c;
}

json attack_result_to_json(const AttackResult& r, const Vocab& vocab) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "attack"},
          {"cfg", attack_config_to_json(r.cfg)},
          {"perturbation", r.perturbation},
          {"perturbation_text", vocab.detokenize(r.perturbation)},
          {"positions", r.positions},
          {"original_token", r.original_token},
          {"anchor", {{"kind", std::string(span_kind_name(r.anchor.kind))}, {"step", r.anchor.step},
                      {"offset", r.anchor.offset}}},
          {"trajectory", r.trajectory},
          {"initial_objective", r.initial_objective},
          {"objective", r.objective},
          {"gradient_queries", r.gradient_queries},
          {"forward_queries", r.forward_queries},
          {"vocab_digest", r.vocab_digest},
          {"prompt", prompt_to_json(r.prompt)}};
}

AttackResult attack_result_from_json(const json& j) {
  check_schema(j, "attack");
  return guarded("attack", [&] {
    AttackResult r;
    try {
      r.cfg = attack_config_from_json(j.at("cfg"));
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptFile, e.what());
    }
    r.perturbation = j.at("perturbation").get<std::vector<int>>();
    r.positions = j.at("positions").get<std::vector<int>>();
    r.original_token = j.at("original_token").get<int>();
    const auto& a = j.at("anchor");
    r.anchor = {enum_from<SpanKind>(a.at("kind"), parse_span_kind, "span kind"), a.at("step").get<int>(),
                a.at("offset").get<int>()};
    r.trajectory = j.at("trajectory").get<std::vector<double>>();
    r.initial_objective = j.at("initial_objective").get<double>();
    r.objective = j.at("objective").get<double>();
    r.gradient_queries = j.at("gradient_queries").get<std::uint64_t>();
    r.forward_queries = j.at("forward_queries").get<std::uint64_t>();
    r.vocab_digest = j.at("vocab_digest").get<std::uint64_t>();
    r.prompt = prompt_from_json(j.at("prompt"));
    return r;
  });
}

json attack_results_to_json(const std::vector<std::optional<AttackResult>>& results,
                            const std::vector<RouteInstance>& routes, const Vocab& vocab) {
  json items = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i]) continue;
    items.push_back({{"route_id", routes.at(i).id}, {"result", attack_result_to_json(*results[i], vocab)}});
  }
  return {{"schema_version", kSchemaVersion}, {"kind", "attacks"}, {"attacks", items}};
}

std::vector<std::optional<AttackResult>> attack_results_from_json(const json& j,
                                                                  const std::vector<RouteInstance>& routes) {
  check_schema(j, "attacks");
  return guarded("attacks", [&] {
    std::vector<std::optional<AttackResult>> out(routes.size());
    for (const auto& item : j.at("attacks")) {
      const auto id = item.at("route_id").get<std::string>();
      bool found = false;
      for (std::size_t i = 0; i < routes.size(); ++i) {
        if (routes[i].id == id) {
          out[i] = attack_result_from_json(item.at("result"));
          found = true;
        }
      }
      if (!found) throw Error(ErrorCode::CorruptFile, "attack for unknown route " + id);
    }
    return out;
  });
}

json trace_to_json(const EpisodeTrace& t) {
  json actions = json::array();
  for (Action a : t.actions) actions.push_back(std::string(action_word(a)));
  return {{"route_id", t.route_id},
          {"visited", t.visited},
          {"actions", actions},
          {"termination", std::string(termination_name(t.termination))},
          {"stop_node", t.stop_node ? json(*t.stop_node) : json(nullptr)},
          {"steps", t.steps},
          {"defense", t.defense},
          {"attack", t.attack}};
}

EpisodeTrace trace_from_json(const json& j) {
  return guarded("trace", [&] {
    EpisodeTrace t;
    t.route_id = j.at("route_id").get<std::string>();
    t.visited = j.at("visited").get<std::vector<int>>();
    for (const auto& a : j.at("actions")) t.actions.push_back(action_from(a));
    t.termination = enum_from<Termination>(j.at("termination"), parse_termination, "termination");
    if (!j.at("stop_node").is_null()) t.stop_node = j.at("stop_node").get<int>();
    t.steps = j.at("steps").get<int>();
    t.defense = j.at("defense").get<std::string>();
    t.attack = j.at("attack").get<std::string>();
    return t;
  });
}

json metrics_to_json(const MetricsReport& m) {
  return {{"n_episodes", m.n_episodes}, {"spd", m.spd}, {"kpa", m.kpa}, {"tc", m.tc},
          {"tc1", m.tc1},               {"fkpe", m.fkpe}, {"di", m.di},   {"pl", m.pl}};
}

MetricsReport metrics_from_json(const json& j) {
  return guarded("metrics", [&] {
    MetricsReport m;
    m.n_episodes = j.at("n_episodes").get<int>();
    m.spd = j.at("spd").get<double>();
    m.kpa = j.at("kpa").get<double>();
    m.tc = j.at("tc").get<double>();
    m.tc1 = j.at("tc1").get<double>();
    m.fkpe = j.at("fkpe").get<int>();
    m.di = j.at("di").get<int>();
    m.pl = j.at("pl").get<double>();
    return m;
  });
}

void save_checkpoint(const std::string& path, const ReasonerParams& p, const Vocab& vocab) {
  if (p.vocab_size != vocab.size()) throw Error(ErrorCode::VocabMismatch, "model and vocabulary sizes differ");
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(p.vocab_size));
  put_u32(out, static_cast<std::uint32_t>(p.dim));
  put_u32(out, static_cast<std::uint32_t>(p.arch));
  put_u64(out, p.seed);
  put_u32(out, static_cast<std::uint32_t>(p.hidden));
  put_u32(out, static_cast<std::uint32_t>(p.taps));
  put_u32(out, static_cast<std::uint32_t>(p.window_token));
  std::uint32_t mode = 0;
  for (std::size_t i = 0; i < kModes.size(); ++i) {
    if (kModes[i] == p.training_mode) mode = static_cast<std::uint32_t>(i);
  }
  put_u32(out, mode);
  for (const auto* t : p.tensors()) {
    put_u64(out, t->size());
    for (double v : *t) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  write_text_file(path, out);
  write_json_file(path + ".vocab.json", vocab.to_json());
}

std::pair<ReasonerParams, Vocab> load_checkpoint(const std::string& path) {
  const std::string buf = read_text_file(path);
  if (buf.size() < sizeof kMagic || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::SchemaMismatch, path + " is not a NAVSEC01 checkpoint");
  }
  Reader r{buf, sizeof kMagic};
  ReasonerParams p;
  p.vocab_size = static_cast<int>(r.u32());
  p.dim = static_cast<int>(r.u32());
  const std::uint32_t arch = r.u32();
  if (arch > 1) throw Error(ErrorCode::CorruptFile, "unknown architecture tag");
  p.arch = static_cast<Arch>(arch);
  p.seed = r.u64();
  p.hidden = static_cast<int>(r.u32());
  p.taps = static_cast<int>(r.u32());
  p.window_token = static_cast<int>(static_cast<std::int32_t>(r.u32()));
  const std::uint32_t mode = r.u32();
  if (mode >= kModes.size()) throw Error(ErrorCode::CorruptFile, "unknown training mode");
  p.training_mode = std::string(kModes[mode]);

  const auto V = static_cast<std::size_t>(p.vocab_size), d = static_cast<std::size_t>(p.dim);
  const auto h = static_cast<std::size_t>(p.hidden), taps = static_cast<std::size_t>(p.taps);
  std::vector<std::size_t> shapes;
  if (p.arch == Arch::Linear) {
    shapes = {V * d, kNumActions * d, kNumActions};
  } else {
    shapes = {V * d, taps * d, d * d, d * d, d * d, d * d, h * d, h, kNumActions * h, kNumActions};
  }
  auto tensors = p.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const std::uint64_t n = r.u64();
    if (n != shapes[i]) throw Error(ErrorCode::CorruptFile, "tensor " + std::to_string(i) + " has the wrong size");
    tensors[i]->resize(n);
    for (auto& v : *tensors[i]) v = std::bit_cast<double>(r.u64());
  }
  if (r.at != buf.size()) throw Error(ErrorCode::CorruptFile, "trailing bytes in checkpoint");
  Vocab vocab = Vocab::from_json(read_json_file(path + ".vocab.json"));
  if (vocab.size() != p.vocab_size) throw Error(ErrorCode::VocabMismatch, "vocabulary size differs from checkpoint");
  return {std::move(p), std::move(vocab)};
}

}  // namespace navsec

#include "ctxfer/sources.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ctxfer {

int TablePolicy::act(const State& s) const {
  if (s.index < 0 || size_t(s.index) >= actions_.size())
    throw std::invalid_argument("bad-config: state index outside policy table");
  return actions_[size_t(s.index)];
}

int GreedyNetPolicy::act(const State& s) const {
  return argmax_lowest(net_.forward(s.features));
}

TabularDyn::TabularDyn(int S, int A)
    : num_states(S),
      num_actions(A),
      next(size_t(S) * size_t(A)),
      seen(size_t(S) * size_t(A), 0) {
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) next[size_t(s) * size_t(A) + size_t(a)] = s;
}

void TabularDyn::observe(int s, int a, int s_next) {
  next[size_t(s) * size_t(num_actions) + size_t(a)] = s_next;
  seen[size_t(s) * size_t(num_actions) + size_t(a)] = 1;
}

int TabularDyn::predict(int s, int a) const {
  return next[size_t(s) * size_t(num_actions) + size_t(a)];
}

bool TabularDyn::visited(int s, int a) const {
  return seen[size_t(s) * size_t(num_actions) + size_t(a)] != 0;
}

std::vector<double> MlpDyn::predict(const std::vector<double>& feat, int a) const {
  std::vector<double> in(feat);
  const auto hot = one_hot(a, num_actions);
  in.insert(in.end(), hot.begin(), hot.end());
  auto delta = net.forward(in);
  for (size_t k = 0; k < delta.size(); ++k) delta[k] += feat[k];
  return delta;
}

double dyn_train_step(MlpDyn& dyn, const std::vector<Transition>& batch,
                      AdamState& opt) {
  if (batch.empty()) throw std::invalid_argument("bad-config: empty dynamics batch");
  GradBuf g = dyn.net.make_grad();
  Mlp::Trace tr;
  const size_t B = batch.size();
  const int D = dyn.net.output_size();
  std::vector<double> in;
  std::vector<double> dout(static_cast<size_t>(D));
  double mse = 0.0;
  for (const Transition& t : batch) {
    in = t.s.features;
    const auto hot = one_hot(t.action, dyn.num_actions);
    in.insert(in.end(), hot.begin(), hot.end());
    const auto& pred = dyn.net.forward(in, tr);
    for (int k = 0; k < D; ++k) {
      const double err =
          pred[size_t(k)] + t.s.features[size_t(k)] - t.s_next.features[size_t(k)];
      mse += err * err;
      dout[size_t(k)] = 2.0 * err / double(B * size_t(D));
    }
    dyn.net.backward(tr, dout, g, /*include_l2=*/false);
  }
  dyn.net.add_l2_grad(g);
  adam_step(dyn.net, opt, g);
  return mse / double(B * size_t(D));
}

double dyn_mse(const MlpDyn& dyn, const std::vector<Transition>& data) {
  if (data.empty()) throw std::invalid_argument("bad-config: empty dynamics data");
  double mse = 0.0;
  for (const Transition& t : data) {
    const auto pred = dyn.predict(t.s.features, t.action);
    for (size_t k = 0; k < pred.size(); ++k) {
      const double err = pred[k] - t.s_next.features[k];
      mse += err * err;
    }
  }
  return mse / double(data.size() * data[0].s.features.size());
}

double SourceTask::likelihood(const Transition& t) const {
  if (const auto* tab = std::get_if<TabularDyn>(&dyn)) {
    return tab->predict(t.s.index, t.action) == t.s_next.index ? 1.0 : 0.0;
  }
  const auto& m = std::get<MlpDyn>(dyn);
  const auto pred = m.predict(t.s.features, t.action);
  double sq = 0.0;
  for (size_t k = 0; k < pred.size(); ++k) {
    const double err = pred[k] - t.s_next.features[k];
    sq += err * err;
  }
  return std::exp(-nu * sq);
}

namespace {

json policy_to_json(const Policy& p) {
  if (const auto* t = dynamic_cast<const TablePolicy*>(&p))
    return json{{"kind", "table"}, {"actions", t->table()}};
  if (const auto* g = dynamic_cast<const GreedyNetPolicy*>(&p))
    return json{{"kind", "greedy_net"}, {"net", json::parse(g->net().serialize())}};
  if (const auto* u = dynamic_cast<const UniformPolicy*>(&p))
    return json{{"kind", "uniform"}, {"num_actions", u->num_actions()}};
  throw std::runtime_error("bad-config: unserializable policy type");
}

std::unique_ptr<Policy> policy_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "table")
    return std::make_unique<TablePolicy>(j.at("actions").get<std::vector<int>>());
  if (kind == "greedy_net")
    return std::make_unique<GreedyNetPolicy>(Mlp::deserialize(j.at("net").dump()));
  if (kind == "uniform")
    return std::make_unique<UniformPolicy>(j.at("num_actions").get<int>());
  throw std::runtime_error("bad-config: unknown policy kind '" + kind + "'");
}

json dyn_to_json(const std::variant<TabularDyn, MlpDyn>& d) {
  if (const auto* tab = std::get_if<TabularDyn>(&d)) {
    return json{{"kind", "tabular"},
                {"num_states", tab->num_states},
                {"num_actions", tab->num_actions},
                {"next", tab->next},
                {"seen", std::vector<int>(tab->seen.begin(), tab->seen.end())}};
  }
  const auto& m = std::get<MlpDyn>(d);
  return json{{"kind", "mlp_delta"},
              {"num_actions", m.num_actions},
              {"net", json::parse(m.net.serialize())}};
}

std::variant<TabularDyn, MlpDyn> dyn_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "tabular") {
    TabularDyn tab(j.at("num_states").get<int>(), j.at("num_actions").get<int>());
    tab.next = j.at("next").get<std::vector<int>>();
    const auto seen = j.at("seen").get<std::vector<int>>();
    if (tab.next.size() != size_t(tab.num_states) * size_t(tab.num_actions) ||
        seen.size() != tab.next.size())
      throw std::runtime_error("bad-config: tabular dynamics shape mismatch");
    tab.seen.assign(seen.begin(), seen.end());
    return tab;
  }
  if (kind == "mlp_delta") {
    MlpDyn m;
    m.num_actions = j.at("num_actions").get<int>();
    m.net = Mlp::deserialize(j.at("net").dump());
    return m;
  }
  throw std::runtime_error("bad-config: unknown dynamics kind '" + kind + "'");
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("bad-config: cannot write " + p.string());
  out << content;
}

json read_json(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("bad-config: cannot read " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("bad-config: " + p.string() + ": " + e.what());
  }
}

}  // namespace

void save_sources(const std::string& dir, const std::vector<SourceTask>& tasks) {
  fs::create_directories(dir);
  json manifest;
  manifest["format_version"] = 1;
  manifest["sources"] = json::array();
  for (size_t i = 0; i < tasks.size(); ++i) {
    const std::string pol = "policy_" + std::to_string(i) + ".json";
    const std::string dynf = "dyn_" + std::to_string(i) + ".json";
    write_file(fs::path(dir) / pol, policy_to_json(*tasks[i].policy).dump(2));
    write_file(fs::path(dir) / dynf, dyn_to_json(tasks[i].dyn).dump(2));
    manifest["sources"].push_back(json{{"name", tasks[i].name},
                                       {"policy", pol},
                                       {"dynamics", dynf},
                                       {"nu", tasks[i].nu}});
  }
  write_file(fs::path(dir) / "manifest.json", manifest.dump(2));
}

std::vector<SourceTask> load_sources(const std::string& dir) {
  const fs::path man = fs::path(dir) / "manifest.json";
  if (!fs::exists(man))
    throw std::runtime_error("sources-not-found: " + man.string());
  const json manifest = read_json(man);
  if (!manifest.contains("format_version") ||
      manifest.at("format_version").get<int>() != 1)
    throw std::runtime_error("bad-config: unsupported bundle format_version");
  std::vector<SourceTask> out;
  try {
    for (const json& e : manifest.at("sources")) {
      SourceTask t;
      t.name = e.at("name").get<std::string>();
      t.nu = e.at("nu").get<double>();
      t.policy = policy_from_json(
          read_json(fs::path(dir) / e.at("policy").get<std::string>()));
      t.dyn = dyn_from_json(
          read_json(fs::path(dir) / e.at("dynamics").get<std::string>()));
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad-config: ") + e.what());
  }
  if (out.empty()) throw std::runtime_error("bad-config: bundle lists no sources");
  return out;
}

}  // namespace ctxfer

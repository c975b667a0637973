#include "hcap/grad.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace hcap {

void ParamBlocks::add(const std::string& name, const Eigen::VectorXd& value) {
  if (has(name)) {
    throw std::invalid_argument("duplicate parameter block '" + name + "'");
  }
  blocks_.push_back({name, value, std::vector<char>(value.size(), 1)});
}

bool ParamBlocks::has(const std::string& name) const {
  return std::any_of(blocks_.begin(), blocks_.end(), [&](const ParamBlock& b) { return b.name == name; });
}

ParamBlock& ParamBlocks::block(const std::string& name) {
  for (auto& b : blocks_) {
    if (b.name == name) {
      return b;
    }
  }
  throw std::invalid_argument("unknown parameter block '" + name + "'");
}

const ParamBlock& ParamBlocks::block(const std::string& name) const {
  return const_cast<ParamBlocks*>(this)->block(name);
}

void ParamBlocks::setActive(const std::string& name, bool active) {
  auto& b = block(name);
  std::fill(b.active.begin(), b.active.end(), active ? 1 : 0);
}

double FunctionObjective::evaluate(const ParamBlocks& params, BlockGradients* grad) const {
  if (grad) {
    throw std::invalid_argument("objective '" + name_ + "' has no analytic gradient");
  }
  return fn_(params);
}

void WeightedSum::add(double weight, std::shared_ptr<Objective> term) {
  terms_.emplace_back(weight, std::move(term));
}

std::vector<std::string> WeightedSum::blockNames() const {
  std::vector<std::string> names;
  for (const auto& [w, term] : terms_) {
    for (const auto& n : term->blockNames()) {
      if (std::find(names.begin(), names.end(), n) == names.end()) {
        names.push_back(n);
      }
    }
  }
  return names;
}

void WeightedSum::freeze(const ParamBlocks& params) {
  for (auto& [w, term] : terms_) {
    term->freeze(params);
  }
}

double WeightedSum::evaluate(const ParamBlocks& params, BlockGradients* grad) const {
  double total = 0.0;
  for (const auto& [w, term] : terms_) {
    if (w == 0.0) {
      continue;
    }
    if (!grad) {
      total += w * term->evaluate(params, nullptr);
      continue;
    }
    BlockGradients g;
    total += w * term->evaluate(params, &g);
    for (auto& [name, v] : g) {
      auto it = grad->find(name);
      if (it == grad->end()) {
        (*grad)[name] = w * v;
      } else {
        it->second += w * v;
      }
    }
  }
  return total;
}

bool WeightedSum::differentiable() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.second->differentiable(); });
}

std::vector<double> WeightedSum::components(const ParamBlocks& params) const {
  std::vector<double> out;
  for (const auto& [w, term] : terms_) {
    out.push_back(term->evaluate(params, nullptr));
  }
  return out;
}

BlockGradients gradient(const Objective& objective, const ParamBlocks& params) {
  if (!objective.differentiable()) {
    throw std::invalid_argument("objective '" + objective.name() + "' contains a term without analytic gradient");
  }
  BlockGradients g;
  objective.evaluate(params, &g);
  for (const auto& b : params.all()) {
    auto it = g.find(b.name);
    if (it == g.end()) {
      g[b.name] = Eigen::VectorXd::Zero(b.value.size());
      continue;
    }
    for (Eigen::Index i = 0; i < it->second.size(); ++i) {
      if (!b.active[i]) {
        it->second[i] = 0.0;
      }
    }
  }
  return g;
}

double gradientError(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  if (analytic.size() == 0) {
    return 0.0;
  }
  const double diff = (analytic - numeric).lpNorm<Eigen::Infinity>();
  const double denom = std::max(analytic.lpNorm<Eigen::Infinity>(), numeric.lpNorm<Eigen::Infinity>());
  return denom < 1e-8 ? diff : diff / denom;
}

FdReport fdCheck(Objective& objective, const ParamBlocks& params, const FdOptions& options) {
  if (!(options.step > 0.0)) {
    throw std::invalid_argument("finite-difference step must be positive");
  }
  objective.freeze(params);
  const BlockGradients analytic = gradient(objective, params);
  std::mt19937_64 rng(options.seed);
  FdReport report;
  ParamBlocks probe = params;
  for (const auto& b : params.all()) {
    std::vector<int> entries;
    for (int i = 0; i < static_cast<int>(b.value.size()); ++i) {
      if (b.active[i]) {
        entries.push_back(i);
      }
    }
    if (options.maxEntriesPerBlock > 0 && static_cast<int>(entries.size()) > options.maxEntriesPerBlock) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(options.maxEntriesPerBlock);
      std::sort(entries.begin(), entries.end());
    }
    Eigen::VectorXd a(entries.size());
    Eigen::VectorXd f(entries.size());
    const Eigen::VectorXd& ga = analytic.at(b.name);
    for (size_t e = 0; e < entries.size(); ++e) {
      const int i = entries[e];
      auto& x = probe[b.name];
      const double x0 = x[i];
      x[i] = x0 + options.step;
      const double up = objective.evaluate(probe, nullptr);
      x[i] = x0 - options.step;
      const double down = objective.evaluate(probe, nullptr);
      x[i] = x0;
      a[e] = ga[i];
      f[e] = (up - down) / (2.0 * options.step);
    }
    const double err = gradientError(a, f);
    report.error[b.name] = err;
    report.worst = std::max(report.worst, err);
  }
  return report;
}

} // namespace hcap

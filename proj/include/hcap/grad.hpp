#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace hcap {

struct ParamBlock {
  std::string name;
  Eigen::VectorXd value;
  std::vector<char> active; // per entry; inactive entries get zero gradient
};

/// Named parameter vectors ("theta", "alpha", "A", "T").
class ParamBlocks {
 public:
  void add(const std::string& name, const Eigen::VectorXd& value);
  bool has(const std::string& name) const;
  ParamBlock& block(const std::string& name);
  const ParamBlock& block(const std::string& name) const;
  Eigen::VectorXd& operator[](const std::string& name) {
    return block(name).value;
  }
  const Eigen::VectorXd& operator[](const std::string& name) const {
    return block(name).value;
  }
  void setActive(const std::string& name, bool active);
  const std::vector<ParamBlock>& all() const {
    return blocks_;
  }

 private:
  std::vector<ParamBlock> blocks_;
};

using BlockGradients = std::map<std::string, Eigen::VectorXd>;

/// Scalar objective over parameter blocks. `freeze` fixes the discrete
/// selections (boundary sets, gates, sampling cells) at the given point; the
/// objective is smooth in the parameters while frozen.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::vector<std::string> blockNames() const = 0;
  virtual void freeze(const ParamBlocks&) {}
  virtual double evaluate(const ParamBlocks& params, BlockGradients* grad) const = 0;
  virtual bool differentiable() const {
    return true;
  }
  virtual std::string name() const = 0;
};

/// Objective given only as a value; rejected by gradient().
class FunctionObjective : public Objective {
 public:
  FunctionObjective(std::string name, std::vector<std::string> blocks, std::function<double(const ParamBlocks&)> fn)
      : name_(std::move(name)), blocks_(std::move(blocks)), fn_(std::move(fn)) {}
  std::vector<std::string> blockNames() const override {
    return blocks_;
  }
  double evaluate(const ParamBlocks& params, BlockGradients* grad) const override;
  bool differentiable() const override {
    return false;
  }
  std::string name() const override {
    return name_;
  }

 private:
  std::string name_;
  std::vector<std::string> blocks_;
  std::function<double(const ParamBlocks&)> fn_;
};

class WeightedSum : public Objective {
 public:
  explicit WeightedSum(std::string name = "sum") : name_(std::move(name)) {}
  void add(double weight, std::shared_ptr<Objective> term);
  std::vector<std::string> blockNames() const override;
  void freeze(const ParamBlocks& params) override;
  double evaluate(const ParamBlocks& params, BlockGradients* grad) const override;
  bool differentiable() const override;
  std::string name() const override {
    return name_;
  }
  /// Unweighted value of every term, in insertion order.
  std::vector<double> components(const ParamBlocks& params) const;
  const std::vector<std::pair<double, std::shared_ptr<Objective>>>& terms() const {
    return terms_;
  }

 private:
  std::string name_;
  std::vector<std::pair<double, std::shared_ptr<Objective>>> terms_;
};

/// Analytic gradient of the objective, masked by the active sets. Throws
/// std::invalid_argument for objectives without an analytic gradient.
BlockGradients gradient(const Objective& objective, const ParamBlocks& params);

struct FdOptions {
  double step = 1e-5;
  int maxEntriesPerBlock = 0; // 0 checks every active entry
  std::uint64_t seed = 0; // chooses the checked entries when limited
};

struct FdReport {
  std::map<std::string, double> error; // per block
  double worst = 0.0;
};

/// Relative error ‖a − f‖∞ / max(‖a‖∞, ‖f‖∞); absolute when the denominator is below 1e-8.
double gradientError(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric);

/// Compares the analytic gradient to central differences with the objective's
/// selections frozen at `params`.
FdReport fdCheck(Objective& objective, const ParamBlocks& params, const FdOptions& options = {});

} // namespace hcap

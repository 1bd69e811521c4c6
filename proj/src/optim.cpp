#include "tsrnn/optim.hpp"

#include <cmath>
#include <sstream>

#include "tsrnn/errors.hpp"

namespace tsrnn {

Rmsprop::Rmsprop(const RmspropConfig& cfg, const std::vector<TensorView>& params) : cfg_(cfg) {
  if (!(cfg.base_rate > 0.0)) throw_invalid("rmsprop: base_rate must be > 0");
  if (cfg.decay < 0.0) throw_invalid("rmsprop: decay must be >= 0");
  if (!(cfg.rho > 0.0 && cfg.rho < 1.0)) throw_invalid("rmsprop: rho must be in (0,1)");
  if (!(cfg.epsilon > 0.0)) throw_invalid("rmsprop: epsilon must be > 0");
  names_.reserve(params.size());
  acc_.reserve(params.size());
  for (const TensorView& v : params) {
    names_.push_back(v.name);
    acc_.emplace_back(v.size, 0.0);
  }
}

double Rmsprop::effective_rate() const {
  return cfg_.base_rate / (1.0 + cfg_.decay * double(iteration_));
}

void Rmsprop::apply_update(const std::vector<TensorView>& params,
                           const std::vector<TensorView>& grads) {
  if (params.size() != names_.size() || grads.size() != names_.size())
    throw_invalid("rmsprop: tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size != acc_[i].size() || grads[i].size != acc_[i].size()) {
      std::ostringstream os;
      os << "rmsprop: shape mismatch for tensor " << names_[i];
      throw_invalid(os.str());
    }
  }

  // reject before mutating anything
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double* g = grads[i].data;
    for (std::size_t k = 0; k < grads[i].size; ++k) {
      if (!std::isfinite(g[k])) {
        std::ostringstream os;
        os << "rmsprop: non-finite gradient in tensor " << names_[i] << " at index " << k << " ("
           << g[k] << ")";
        throw_numeric(os.str());
      }
    }
  }

  const double rate = effective_rate();
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].data;
    const double* g = grads[i].data;
    double* a = acc_[i].data();
    const std::size_t n = params[i].size;
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = cfg_.rho * a[k] + (1.0 - cfg_.rho) * g[k] * g[k];
      p[k] -= rate * g[k] / (std::sqrt(a[k]) + cfg_.epsilon);
    }
  }
  ++iteration_;
}

}  // namespace tsrnn

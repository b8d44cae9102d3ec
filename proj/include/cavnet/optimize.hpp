#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cavnet/evolve.hpp"

namespace cavnet {

// Tunable handles into a protocol. Rate and Center address one segment
// (node/segment = -1 expands over all). Amplitude and Phase act per node:
// a per-node amplitude factor keeps segment joins continuous. RampScale is a
// single global time-stretch factor.
struct FreeParam {
  enum class Field { Rate, Center, Amplitude, Phase, RampScale };
  Field field = Field::Rate;
  int node = -1;
  int segment = -1;
};

struct OptimizeOptions {
  int budget = 500;  // objective evaluations
  int restarts = 3;
  std::uint64_t seed = 12345;
  double initial_step = 0.15;  // relative simplex displacement
};

struct OptimizeResult {
  Protocol protocol;
  double fidelity_before = 0;
  double fidelity_after = 0;
  int evaluations = 0;
};

namespace detail {

struct ParamHandle {
  FreeParam::Field field;
  int node = 0, segment = 0;
  double scale = 1.0;  // step scale for the simplex
};

inline std::vector<ParamHandle> expand_params(
    const Protocol& proto, const std::vector<FreeParam>& free_params) {
  std::vector<ParamHandle> out;
  auto each_node = [&](int sel, auto&& fn) {
    for (int n = 0; n < proto.n_nodes(); ++n)
      if (sel < 0 || sel == n) fn(n);
  };
  for (const FreeParam& fp : free_params) {
    switch (fp.field) {
      case FreeParam::Field::RampScale:
        out.push_back({fp.field, 0, 0, 0.2});
        break;
      case FreeParam::Field::Phase:
      case FreeParam::Field::Amplitude:
        each_node(fp.node, [&](int n) {
          out.push_back({fp.field, n, 0,
                         fp.field == FreeParam::Field::Phase ? 0.3 : 0.1});
        });
        break;
      case FreeParam::Field::Rate:
      case FreeParam::Field::Center:
        each_node(fp.node, [&](int n) {
          const auto& segs =
              proto.schedules[static_cast<std::size_t>(n)].segments;
          for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
            if (fp.segment >= 0 && fp.segment != s) continue;
            const RampSegment& seg = segs[static_cast<std::size_t>(s)];
            if (seg.kind == SegmentKind::Off || seg.kind == SegmentKind::Hold)
              continue;
            const double span = seg.t_end - seg.t_begin;
            out.push_back({fp.field, n, s,
                           fp.field == FreeParam::Field::Rate ? 0.25
                                                              : 0.1 * span});
          }
        });
        break;
    }
  }
  return out;
}

// Parameter vector x holds multiplicative factors for Rate/Amplitude/RampScale
// (x = 1 is the input protocol), additive offsets for Center and Phase.
inline Protocol apply_params(const Protocol& base,
                             const std::vector<ParamHandle>& handles,
                             const std::vector<double>& x, double* penalty) {
  *penalty = 0;
  double ramp_scale = 1.0;
  Protocol out = base;
  for (std::size_t k = 0; k < handles.size(); ++k) {
    const ParamHandle& h = handles[k];
    const double v = x[k];
    switch (h.field) {
      case FreeParam::Field::RampScale:
        if (v <= 0.05) *penalty += 100 * (0.05 - v + 1);
        ramp_scale = std::max(0.05, v);
        break;
      case FreeParam::Field::Amplitude: {
        if (v <= 0) *penalty += 100 * (1 - v);
        const double fac = std::max(0.0, v);
        for (RampSegment& seg :
             out.schedules[static_cast<std::size_t>(h.node)].segments) {
          seg.amp_from *= fac;
          seg.amp_to *= fac;
        }
        break;
      }
      case FreeParam::Field::Phase:
        out.schedules[static_cast<std::size_t>(h.node)].phase += v;
        break;
      case FreeParam::Field::Rate: {
        if (v <= 0.01) *penalty += 100 * (0.01 - v + 1);
        RampSegment& seg = out.schedules[static_cast<std::size_t>(h.node)]
                               .segments[static_cast<std::size_t>(h.segment)];
        seg.rate *= std::max(0.01, v);
        break;
      }
      case FreeParam::Field::Center: {
        RampSegment& seg = out.schedules[static_cast<std::size_t>(h.node)]
                               .segments[static_cast<std::size_t>(h.segment)];
        seg.center += v;
        // keep the tanh midpoint inside the window
        if (seg.center < seg.t_begin) {
          *penalty += seg.t_begin - seg.center;
          seg.center = seg.t_begin;
        } else if (seg.center > seg.t_end) {
          *penalty += seg.center - seg.t_end;
          seg.center = seg.t_end;
        }
        break;
      }
    }
  }
  if (ramp_scale != 1.0) out = out.time_scaled(ramp_scale);
  return out;
}

}  // namespace detail

/// Derivative-free local search (Nelder-Mead with seeded restarts) over the
/// selected protocol parameters, maximizing terminal fidelity to the
/// protocol's target. Deterministic for a given seed; the result is never
/// worse than the input protocol.
inline OptimizeResult optimize(const Lattice& lattice,
                               const SystemParams& params,
                               const Protocol& proto,
                               const std::vector<FreeParam>& free_params,
                               const IntegratorConfig& integ,
                               const OptimizeOptions& opt = {}) {
  if (opt.budget < 0) throw std::invalid_argument("optimize: negative budget");
  SectorBasis basis(lattice);
  const StateVector target = proto.target.empty()
                                 ? StateVector(basis)
                                 : proto.target.make_state(basis);
  if (proto.target.empty())
    throw std::invalid_argument("optimize: protocol has no target");

  int evals = 0;
  auto objective = [&](const Protocol& cand, double penalty) -> double {
    ++evals;
    StateVector fin = integrate_final(basis, params, cand, integ);
    return fidelity(fin, target, false) - penalty;
  };

  const double fid_in = fidelity(
      integrate_final(basis, params, proto, integ), target, false);

  OptimizeResult result;
  result.protocol = proto;
  result.fidelity_before = fid_in;
  result.fidelity_after = fid_in;

  const auto handles = detail::expand_params(proto, free_params);
  if (handles.empty() || opt.budget == 0) {
    result.evaluations = evals;
    return result;
  }

  const std::size_t n = handles.size();
  auto x0_for = [&](std::size_t) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto f = handles[k].field;
      x[k] = (f == FreeParam::Field::Center || f == FreeParam::Field::Phase)
                 ? 0.0
                 : 1.0;
    }
    return x;
  };

  double best_score = fid_in;
  std::vector<double> best_x = x0_for(0);
  std::mt19937_64 rng(opt.seed);

  auto eval_x = [&](const std::vector<double>& x) -> double {
    double penalty = 0;
    Protocol cand = detail::apply_params(proto, handles, x, &penalty);
    try {
      cand.validate();
    } catch (const std::invalid_argument&) {
      ++evals;
      return -1e6;
    }
    return objective(cand, penalty);
  };

  for (int restart = 0; restart <= opt.restarts && evals < opt.budget;
       ++restart) {
    std::vector<double> x0 = best_x;
    if (restart > 0) {
      std::normal_distribution<double> jitter(0.0, 0.05);
      for (std::size_t k = 0; k < n; ++k)
        x0[k] += jitter(rng) * handles[k].scale;
    }
    // initial simplex
    std::vector<std::vector<double>> simplex{x0};
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> xk = x0;
      xk[k] += opt.initial_step * handles[k].scale;
      simplex.push_back(xk);
    }
    std::vector<double> score(simplex.size());
    for (std::size_t k = 0; k < simplex.size() && evals < opt.budget; ++k)
      score[k] = eval_x(simplex[k]);

    while (evals < opt.budget) {
      // order: score[order[0]] best (max)
      std::vector<std::size_t> order(simplex.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
      const std::size_t bi = order.front(), wi = order.back();
      const std::size_t si = order[order.size() - 2];
      if (score[bi] > best_score) {
        best_score = score[bi];
        best_x = simplex[bi];
      }
      if (score[bi] - score[wi] < 1e-12) break;  // converged

      std::vector<double> centroid(n, 0.0);
      for (std::size_t k = 0; k < simplex.size(); ++k) {
        if (k == wi) continue;
        for (std::size_t m = 0; m < n; ++m) centroid[m] += simplex[k][m];
      }
      for (double& c : centroid) c /= static_cast<double>(simplex.size() - 1);

      auto blend = [&](double alpha) {
        std::vector<double> x(n);
        for (std::size_t m = 0; m < n; ++m)
          x[m] = centroid[m] + alpha * (simplex[wi][m] - centroid[m]);
        return x;
      };
      std::vector<double> xr = blend(-1.0);
      double fr = eval_x(xr);
      if (fr > score[bi] && evals < opt.budget) {
        std::vector<double> xe = blend(-2.0);
        double fe = eval_x(xe);
        if (fe > fr) {
          simplex[wi] = xe;
          score[wi] = fe;
        } else {
          simplex[wi] = xr;
          score[wi] = fr;
        }
      } else if (fr > score[si]) {
        simplex[wi] = xr;
        score[wi] = fr;
      } else if (evals < opt.budget) {
        std::vector<double> xc = blend(0.5);
        double fc = eval_x(xc);
        if (fc > score[wi]) {
          simplex[wi] = xc;
          score[wi] = fc;
        } else {
          for (std::size_t k = 0; k < simplex.size(); ++k) {
            if (k == bi) continue;
            for (std::size_t m = 0; m < n; ++m)
              simplex[k][m] =
                  simplex[bi][m] + 0.5 * (simplex[k][m] - simplex[bi][m]);
            if (evals >= opt.budget) break;
            score[k] = eval_x(simplex[k]);
          }
        }
      }
    }
  }

  if (best_score > fid_in) {
    double penalty = 0;
    Protocol tuned = detail::apply_params(proto, handles, best_x, &penalty);
    tuned.validate();
    const double fid_out = fidelity(
        integrate_final(basis, params, tuned, integ), target, false);
    if (fid_out >= fid_in) {
      result.protocol = std::move(tuned);
      result.fidelity_after = fid_out;
    }
  }
  result.evaluations = evals;
  return result;
}

inline FreeParam parse_free_param(const std::string& text) {
  // forms: ramp_scale | all.rate | node3.phase | node2.seg1.center
  FreeParam fp;
  if (text == "ramp_scale") {
    fp.field = FreeParam::Field::RampScale;
    return fp;
  }
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t dot = text.find('.', pos);
    parts.push_back(text.substr(pos, dot == std::string::npos ? dot : dot - pos));
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  if (parts.size() < 2) throw ConfigError("free parameter: '" + text + "'");
  const std::string& who = parts.front();
  if (who == "all") {
    fp.node = -1;
  } else if (who.rfind("node", 0) == 0) {
    fp.node = std::stoi(who.substr(4));
  } else {
    throw ConfigError("free parameter: bad selector '" + who + "'");
  }
  std::string field = parts.back();
  if (parts.size() == 3) {
    const std::string& seg = parts[1];
    if (seg.rfind("seg", 0) != 0)
      throw ConfigError("free parameter: bad segment selector '" + seg + "'");
    fp.segment = std::stoi(seg.substr(3));
  }
  if (field == "rate") fp.field = FreeParam::Field::Rate;
  else if (field == "center") fp.field = FreeParam::Field::Center;
  else if (field == "amplitude") fp.field = FreeParam::Field::Amplitude;
  else if (field == "phase") fp.field = FreeParam::Field::Phase;
  else throw ConfigError("free parameter: unknown field '" + field + "'");
  return fp;
}

}  // namespace cavnet

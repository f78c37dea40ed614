#include "balancereg/harness.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>

#include "balancereg/csv_format.hpp"
#include "balancereg/errors.hpp"

namespace balancereg {

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BALANCEREG_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ContractError(std::string("BALANCEREG_WORKERS must be a positive integer, got '") + env + "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ProtocolRuns run_protocol(const CausalDataset& data, const SplitPlan& plan, const TrainConfig& base,
                          const std::vector<InferenceMode>& modes, std::size_t workers) {
  ProtocolRuns out;
  std::vector<TrainConfig> configs;
  for (std::size_t s = 0; s < plan.train_subsets.size(); ++s) {
    for (std::size_t k = 0; k < plan.init_seeds[s].size(); ++k) {
      out.ids.push_back({s, k});
      TrainConfig cfg = base;
      cfg.seed = plan.init_seeds[s][k];
      configs.push_back(cfg);
    }
  }
  const CausalDataset test = data.subset(plan.test);
  out.by_mode.assign(modes.size(), std::vector<RunMetrics>(out.ids.size()));

  parallel_for(out.ids.size(), resolve_workers(workers), [&](std::size_t r) {
    const RunId id = out.ids[r];
    const TrainView train = data.train_view(plan.train_subsets[id.subset]);
    const TrainResult fitted = train_run(train, configs[r]);
    for (std::size_t m = 0; m < modes.size(); ++m) {
      out.by_mode[m][r] = RunMetrics{id, modes[m], estimate_impacts(fitted.model, test, modes[m])};
    }
  });
  return out;
}

Experiment prepare_experiment(CausalDataset data, const ExperimentSpec& spec) {
  Experiment exp;
  exp.plan = make_split_plan(data.size(), spec.master_seed, spec.split);
  exp.truth = true_effects(data.subset(exp.plan.test), spec.truth);
  exp.data = std::move(data);
  return exp;
}

std::vector<ComparisonRow> run_comparison(const Experiment& exp, const ExperimentSpec& spec) {
  if (spec.train.weights.regularized()) {
    throw ContractError("comparison runs require gamma = lambda = 0");
  }
  if (spec.models.empty() || spec.modes.empty()) throw ContractError("comparison needs at least one model and mode");
  std::vector<ComparisonRow> rows;
  for (ModelKind model : spec.models) {
    TrainConfig base = spec.train;
    base.model_kind = model;
    ProtocolRuns runs = run_protocol(exp.data, exp.plan, base, spec.modes, spec.workers);
    for (std::size_t m = 0; m < spec.modes.size(); ++m) {
      ComparisonRow row;
      row.model = model;
      row.mode = spec.modes[m];
      row.metrics = aggregate_metrics(exp.truth, runs.by_mode[m]);
      row.runs = std::move(runs.by_mode[m]);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<SweepRow> run_sweep(const Experiment& exp, const ExperimentSpec& spec) {
  if (spec.gamma_grid.empty() || spec.lambda_grid.empty()) throw ContractError("sweep grids must be nonempty");
  for (double g : spec.gamma_grid) {
    if (!(g >= 0.0)) throw ContractError("gamma grid values must be nonnegative");
  }
  for (double l : spec.lambda_grid) {
    if (!(l >= 0.0)) throw ContractError("lambda grid values must be nonnegative");
  }
  std::vector<SweepRow> rows;
  for (double gamma : spec.gamma_grid) {
    for (double lambda : spec.lambda_grid) {
      TrainConfig base = spec.train;
      base.model_kind = ModelKind::two_head;
      base.weights.gamma = gamma;
      base.weights.lambda = lambda;
      ProtocolRuns runs = run_protocol(exp.data, exp.plan, base, {spec.sweep_mode}, spec.workers);
      rows.push_back({gamma, lambda, aggregate_metrics(exp.truth, runs.by_mode[0])});
    }
  }
  return rows;
}

std::vector<ScatterSeries> export_scatter(const Experiment& exp, const ExperimentSpec& spec) {
  const CausalDataset test = exp.data.subset(exp.plan.test);
  std::vector<ScatterSeries> series(spec.models.size());
  parallel_for(spec.models.size(), resolve_workers(spec.workers), [&](std::size_t m) {
    TrainConfig cfg = spec.train;
    cfg.model_kind = spec.models[m];
    if (cfg.model_kind == ModelKind::separate_heads) {
      cfg.weights.gamma = 0.0;
      cfg.weights.lambda = 0.0;
    }
    cfg.seed = exp.plan.init_seeds[0][0];
    const TrainResult fitted = train_run(exp.data.train_view(exp.plan.train_subsets[0]), cfg);
    series[m] = ScatterSeries{spec.models[m], exp.plan.test, residual_correlation(fitted.model, test)};
  });
  return series;
}

// ------------------------------------------------------------ CSV writers

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string metric_fields(const AggregateMetrics& m) {
  return format_double(m.bias_sq) + ',' + format_double(m.variance) + ',' + format_double(m.mse_mean) + ',' +
         format_double(m.mse_std);
}

}  // namespace

void write_comparison_csv(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows) {
  std::ofstream out = open_out(path);
  out << "model,mode,bias_sq,variance,mse_mean,mse_std\n";
  for (const ComparisonRow& row : rows) {
    out << to_string(row.model) << ',' << to_string(row.mode) << ',' << metric_fields(row.metrics) << '\n';
  }
  finish(out, path);
}

void write_estimates_csv(const std::filesystem::path& path, const ComparisonRow& row,
                         const std::vector<std::size_t>& test_units, const std::vector<double>& truth,
                         std::size_t inits) {
  std::ofstream out = open_out(path);
  out << "run_id,unit_id,im_hat,truth\n";
  for (const RunMetrics& run : row.runs) {
    const std::size_t run_id = run.run_id.subset * inits + run.run_id.init;
    for (std::size_t i = 0; i < run.im_hat.size(); ++i) {
      out << run_id << ',' << test_units[i] << ',' << format_double(run.im_hat[i]) << ',' << format_double(truth[i])
          << '\n';
    }
  }
  finish(out, path);
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream out = open_out(path);
  out << "gamma,lambda,bias_sq,variance,mse_mean,mse_std\n";
  for (const SweepRow& row : rows) {
    out << format_double(row.gamma) << ',' << format_double(row.lambda) << ',' << metric_fields(row.metrics) << '\n';
  }
  finish(out, path);
}

void write_scatter_csv(const std::filesystem::path& path, const std::vector<ScatterSeries>& series) {
  std::ofstream out = open_out(path);
  out << "model,unit_id,treated_residual,control_residual\n";
  for (const ScatterSeries& s : series) {
    for (std::size_t i = 0; i < s.unit_ids.size(); ++i) {
      out << to_string(s.model) << ',' << s.unit_ids[i] << ',' << format_double(s.residuals.treated_residual[i]) << ','
          << format_double(s.residuals.control_residual[i]) << '\n';
    }
  }
  finish(out, path);
}

void write_scatter_summary_csv(const std::filesystem::path& path, const std::vector<ScatterSeries>& series) {
  std::ofstream out = open_out(path);
  out << "model,pearson_r\n";
  for (const ScatterSeries& s : series) {
    out << to_string(s.model) << ',' << (s.residuals.r ? format_double(*s.residuals.r) : "undefined_correlation")
        << '\n';
  }
  finish(out, path);
}

}  // namespace balancereg

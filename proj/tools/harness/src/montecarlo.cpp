#include "harness/montecarlo.hpp"

#include <atomic>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include "heatest/error.hpp"

namespace heatest::harness {

namespace {

class StatSink : public RowSink {
 public:
  StatSink(const StatRequest& req) : req_(req), acc_(*req.plan, kStreamLanes) {}

  void consume(const LaneRow& row) override {
    if (req_.plan->row_window(row.row) < 0) return;
    if (req_.clean || req_.eta == 0.0) {
      acc_.add_row(row.row, row.signal);
      return;
    }
    buf_.resize(row.signal.size());
    const double eta = req_.eta;
    for (std::size_t i = 0; i < buf_.size(); ++i) buf_[i] = row.signal[i] + eta * row.static_noise[i];
    acc_.add_row(row.row, buf_);
  }

  StatTable table(std::size_t lane) const { return acc_.table(lane); }

 private:
  StatRequest req_;
  StatAccumulator acc_;
  std::vector<double> buf_;
};

class FunctionalSink : public RowSink {
 public:
  FunctionalSink(std::vector<SeparableFunctional> f) : acc_(std::move(f), kStreamLanes) {}
  void consume(const LaneRow& row) override { acc_.add_row(row.row, row.signal); }
  const FunctionalAccumulator& acc() const { return acc_; }

 private:
  FunctionalAccumulator acc_;
};

}  // namespace

void run_monte_carlo(const MonteCarloJob& job, const std::function<void(Replication&&)>& consume,
                     const std::function<void(std::size_t, std::size_t)>& progress) {
  if (job.replications == 0) return;
  bool needs_noise = false;
  for (const auto& r : job.stats) {
    if (!r.plan) throw InvalidInput("monte carlo: null plan");
    if (!(r.plan->grid().nt() == job.spec.grid.nt() && r.plan->grid().nx() == job.spec.grid.nx() &&
          r.plan->grid().T() == job.spec.grid.T())) {
      throw InvalidInput("monte carlo: plan grid differs from the simulation grid");
    }
    needs_noise = needs_noise || (!r.clean && r.eta != 0.0);
  }
  const std::size_t n_batches = (job.replications + kStreamLanes - 1) / kStreamLanes;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex mu;
  std::exception_ptr failure;

  auto worker = [&] {
    while (true) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_batches) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure) return;
      }
      try {
        StreamBatch batch;
        batch.master_seed = job.seed;
        batch.static_noise = needs_noise;
        const std::size_t first = b * kStreamLanes;
        const std::size_t count = std::min(kStreamLanes, job.replications - first);
        for (std::size_t l = 0; l < count; ++l) {
          batch.trajectories.push_back(job.first_trajectory + first + l);
        }
        std::vector<std::unique_ptr<StatSink>> stat_sinks;
        std::vector<RowSink*> sinks;
        for (const auto& r : job.stats) {
          stat_sinks.push_back(std::make_unique<StatSink>(r));
          sinks.push_back(stat_sinks.back().get());
        }
        std::unique_ptr<FunctionalSink> fsink;
        if (!job.functionals.empty()) {
          fsink = std::make_unique<FunctionalSink>(job.functionals);
          sinks.push_back(fsink.get());
        }
        simulate_stream(job.spec, {}, batch, sinks);
        for (std::size_t l = 0; l < count; ++l) {
          Replication rep;
          rep.trajectory = batch.trajectories[l];
          rep.index = first + l;
          for (const auto& s : stat_sinks) rep.tables.push_back(s->table(l));
          if (fsink) {
            for (std::size_t f = 0; f < fsink->acc().size(); ++f) {
              rep.functionals.push_back(fsink->acc().value(f, l));
            }
          }
          std::lock_guard<std::mutex> lock(mu);
          consume(std::move(rep));
        }
        const std::size_t d = done.fetch_add(1) + 1;
        if (progress) {
          std::lock_guard<std::mutex> lock(mu);
          progress(d, n_batches);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t n_threads = std::max<std::size_t>(1, std::min(job.threads, n_batches));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace heatest::harness

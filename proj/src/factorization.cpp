#include "mfa/factorization.hpp"

#include "mfa/error.hpp"
#include "mfa/linalg.hpp"
#include "mfa/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

namespace mfa {

namespace {

std::string field(const char* name, std::size_t index) {
    return std::string(name) + "[" + std::to_string(index) + "]";
}

// Everything the driver needs about one factor set.
struct FactorSet {
    std::vector<ModeUpdate> modes;  // indexed by tensor mode
};

struct Evaluated {
    Tensor core;
    double cost = 0.0;
};

class Driver {
public:
    Driver(const Tensor& d, const TrainingConfig& cfg, const SubspaceStep& step)
        : d_(d), cfg_(cfg), step_(step), order_(d.order()) {
        if (cfg.factor_measurement_mode) active_.push_back(0);
        for (std::size_t m = 1; m < order_; ++m) active_.push_back(m);
        threshold_ = cfg.tol * std::max(d.norm(), std::numeric_limits<double>::min());
    }

    AlsResult run() {
        FactorSet init = initial();
        switch (cfg_.schedule) {
            case Schedule::sequential: return sequential(std::move(init));
            case Schedule::parallel: return parallel(std::move(init));
            case Schedule::asynchronous: return asynchronous(std::move(init));
        }
        throw ValidationError("schedule: unsupported value");
    }

private:
    std::size_t rank(std::size_t m) const {
        return m == 0 ? cfg_.measurement_rank : cfg_.ranks[m - 1];
    }

    FactorSet initial() const {
        FactorSet f;
        f.modes.resize(order_);
        for (std::size_t m : active_) {
            auto extent = static_cast<Eigen::Index>(d_.dims()[m]);
            f.modes[m].factor = Matrix::Identity(extent, static_cast<Eigen::Index>(rank(m)));
            f.modes[m].forward = f.modes[m].factor.transpose();
        }
        return f;
    }

    // D projected in every active mode except `skip`.
    Tensor project_except(const FactorSet& f, std::size_t skip) const {
        Tensor x = d_;
        for (std::size_t n : active_)
            if (n != skip) x = mode_multiply(x, f.modes[n].forward, n);
        return x;
    }

    // Extended core and reconstruction cost of a factor set. `z` may carry
    // an already projected core (all active modes applied).
    Evaluated evaluate(const FactorSet& f, Tensor z = {}) const {
        if (z.order() == 0) z = project_except(f, order_);
        Evaluated e;
        e.core = cfg_.factor_measurement_mode ? mode_multiply(z, f.modes[0].factor, 0) : z;
        Tensor recon = e.core;
        for (std::size_t m = 1; m < order_; ++m) recon = mode_multiply(recon, f.modes[m].factor, m);
        double sq = 0.0;
        for (std::size_t i = 0; i < recon.size(); ++i) {
            double r = d_.values()[i] - recon.values()[i];
            sq += r * r;
        }
        e.cost = std::sqrt(sq);
        return e;
    }

    ModeUpdate update(const Tensor& x, std::size_t m, const ModeUpdate& previous) const {
        ModeUpdate u = step_(x, m, rank(m), previous);
        if (static_cast<std::size_t>(u.factor.rows()) != d_.dims()[m] ||
            static_cast<std::size_t>(u.factor.cols()) != rank(m) ||
            u.forward.rows() != u.factor.cols() || u.forward.cols() != u.factor.rows())
            throw DimensionError("subspace step for mode " + std::to_string(m) +
                                 " returned a factor of the wrong shape");
        return u;
    }

    // Bookkeeping shared by the schedules: cost trace, convergence test and
    // the best iterate seen so far.
    struct Tracker {
        double previous_cost;
        double threshold;
        std::vector<double> trace;
        FactorSet best;
        Evaluated best_eval;
        bool converged = false;

        // Returns true when the iteration should stop.
        bool record(const FactorSet& f, Evaluated&& e) {
            double change = std::abs(e.cost - previous_cost);
            previous_cost = e.cost;
            trace.push_back(e.cost);
            bool improved = trace.size() == 1 || e.cost <= best_eval.cost;
            converged = change <= threshold;
            if (improved || converged) {
                best = f;
                best_eval = std::move(e);
            }
            return converged;
        }
    };

    Tracker tracker(const FactorSet& init) const {
        Tracker t;
        Evaluated e0 = evaluate(init);
        t.previous_cost = e0.cost;
        t.threshold = threshold_;
        t.best = init;
        t.best_eval = std::move(e0);
        return t;
    }

    AlsResult finish(Tracker&& t, std::vector<ScheduleEvent> events) const {
        AlsResult r;
        r.modes = std::move(t.best.modes);
        r.core = std::move(t.best_eval.core);
        Provenance& p = r.provenance;
        p.schedule = cfg_.schedule;
        p.engine = cfg_.engine == SubspaceEngine::hebbian ? "hebbian" : "svd";
        p.iterations = t.trace.size();
        p.final_cost = t.best_eval.cost;
        p.converged = t.converged;
        p.cost_trace = std::move(t.trace);
        p.schedule_trace = std::move(events);
        for (const auto& m : r.modes)
            for (const auto& w : m.warnings)
                if (std::find(p.warnings.begin(), p.warnings.end(), w) == p.warnings.end())
                    p.warnings.push_back(w);
        return r;
    }

    // Gauss-Seidel: each mode is refit against the freshest other factors.
    AlsResult sequential(FactorSet f) const {
        Tracker t = tracker(f);
        std::vector<ScheduleEvent> events;
        for (std::size_t it = 1; it <= cfg_.max_iters; ++it) {
            Tensor x_last;
            for (std::size_t m : active_) {
                Tensor x = project_except(f, m);
                f.modes[m] = update(x, m, f.modes[m]);
                events.push_back({m, it, it});
                x_last = std::move(x);
            }
            // The last X_m already has every other mode projected.
            std::size_t last = active_.back();
            Tensor z = mode_multiply(x_last, f.modes[last].forward, last);
            if (t.record(f, evaluate(f, std::move(z)))) break;
        }
        return finish(std::move(t), std::move(events));
    }

    // Jacobi: all modes refit from the previous iterate, then swapped in.
    AlsResult parallel(FactorSet f) const {
        Tracker t = tracker(f);
        std::vector<ScheduleEvent> events;
        for (std::size_t it = 1; it <= cfg_.max_iters; ++it) {
            FactorSet next = f;
            parallel_for(active_.size(), [&](std::size_t k) {
                std::size_t m = active_[k];
                next.modes[m] = update(project_except(f, m), m, f.modes[m]);
            });
            for (std::size_t m : active_) events.push_back({m, it, it - 1});
            f = std::move(next);
            if (t.record(f, evaluate(f))) break;
        }
        return finish(std::move(t), std::move(events));
    }

    // Mode workers publish versioned factors on a shared board. Worker m
    // builds version t from everybody else's version t-1 and keeps its own
    // X_m current with the incremental correction
    //     X_m <- X_m x_n (U_n^T(t-1) U_n(used last)).
    // Because the staleness is fixed at one version the result does not
    // depend on thread timing.
    AlsResult asynchronous(FactorSet f) const {
        struct Board {
            std::mutex mu;
            std::condition_variable cv;
            std::vector<std::vector<ModeUpdate>> versions;  // [mode][t]
            std::vector<std::vector<ScheduleEvent>> events;
            std::size_t stop_at = 0;
            std::exception_ptr error;
        } board;
        board.versions.resize(order_);
        board.events.resize(order_);
        board.stop_at = cfg_.max_iters;
        for (std::size_t m : active_) board.versions[m].push_back(f.modes[m]);

        struct Worker {
            std::size_t mode;
            Tensor x;
            std::vector<Matrix> used;  // backward side of what x was projected with
        };
        std::vector<Worker> workers;
        for (std::size_t m : active_) {
            Worker w{m, d_, std::vector<Matrix>(order_)};
            for (std::size_t n : active_) {
                auto extent = static_cast<Eigen::Index>(d_.dims()[n]);
                w.used[n] = Matrix::Identity(extent, extent);
            }
            workers.push_back(std::move(w));
        }

        auto ready = [&](std::size_t m, std::size_t version) {
            for (std::size_t n : active_)
                if (n != m && board.versions[n].size() <= version) return false;
            return true;
        };

        auto step_worker = [&](Worker& w, std::size_t it) -> bool {
            std::vector<ModeUpdate> sources(order_);
            {
                std::unique_lock lock(board.mu);
                board.cv.wait(lock, [&] {
                    return board.error || it > board.stop_at || ready(w.mode, it - 1);
                });
                if (board.error || it > board.stop_at) return false;
                for (std::size_t n : active_)
                    if (n != w.mode) sources[n] = board.versions[n][it - 1];
                sources[w.mode] = board.versions[w.mode][it - 1];
            }
            for (std::size_t n : active_) {
                if (n == w.mode) continue;
                w.x = mode_multiply(w.x, sources[n].forward * w.used[n], n);
                w.used[n] = sources[n].factor;
            }
            ModeUpdate next = update(w.x, w.mode, sources[w.mode]);
            {
                std::lock_guard lock(board.mu);
                board.versions[w.mode].push_back(std::move(next));
                board.events[w.mode].push_back({w.mode, it, it - 1});
            }
            board.cv.notify_all();
            return true;
        };

        std::size_t thread_count = std::min(max_threads(), workers.size());
        std::vector<std::thread> threads;
        for (std::size_t k = 0; k < thread_count; ++k) {
            threads.emplace_back([&, k] {
                WorkerScope scope;
                try {
                    for (std::size_t it = 1; it <= cfg_.max_iters; ++it)
                        for (std::size_t w = k; w < workers.size(); w += thread_count)
                            if (!step_worker(workers[w], it)) return;
                } catch (...) {
                    {
                        std::lock_guard lock(board.mu);
                        if (!board.error) board.error = std::current_exception();
                    }
                    board.cv.notify_all();
                }
            });
        }

        Tracker t = tracker(f);
        try {
            for (std::size_t it = 1; it <= cfg_.max_iters; ++it) {
                FactorSet snapshot;
                snapshot.modes.resize(order_);
                {
                    std::unique_lock lock(board.mu);
                    board.cv.wait(lock, [&] {
                        if (board.error) return true;
                        for (std::size_t m : active_)
                            if (board.versions[m].size() <= it) return false;
                        return true;
                    });
                    if (board.error) break;
                    for (std::size_t m : active_) snapshot.modes[m] = board.versions[m][it];
                }
                bool stop = t.record(snapshot, evaluate(snapshot));
                if (stop || it == cfg_.max_iters) {
                    std::lock_guard lock(board.mu);
                    board.stop_at = it;
                    break;
                }
            }
        } catch (...) {
            std::lock_guard lock(board.mu);
            if (!board.error) board.error = std::current_exception();
        }
        board.cv.notify_all();
        for (auto& th : threads) th.join();
        if (board.error) std::rethrow_exception(board.error);

        std::vector<ScheduleEvent> events;
        for (std::size_t it = 1; it <= board.stop_at; ++it)
            for (std::size_t m : active_)
                if (it <= board.events[m].size()) events.push_back(board.events[m][it - 1]);
        return finish(std::move(t), std::move(events));
    }

    const Tensor& d_;
    const TrainingConfig& cfg_;
    const SubspaceStep& step_;
    std::size_t order_;
    std::vector<std::size_t> active_;
    double threshold_ = 0.0;
};

void check_factors(const Dims& dims, std::span<const Matrix> factors, const char* what) {
    if (dims.size() != factors.size() + 1)
        throw DimensionError(std::string(what) + ": order-" + std::to_string(dims.size()) +
                             " tensor with " + std::to_string(factors.size()) + " factors");
    for (std::size_t k = 0; k < factors.size(); ++k)
        if (static_cast<std::size_t>(factors[k].rows()) != dims[k + 1])
            throw DimensionError(std::string(what) + ": factor for mode " +
                                 std::to_string(k + 1) + " has " +
                                 std::to_string(factors[k].rows()) + " rows, mode extent is " +
                                 std::to_string(dims[k + 1]));
}

}  // namespace

void validate(const TrainingConfig& cfg, const Dims& dims) {
    if (dims.size() < 2) throw ValidationError("data: needs at least one causal mode");
    const std::size_t modes = dims.size() - 1;
    if (cfg.ranks.size() != modes)
        throw ValidationError("ranks: expected " + std::to_string(modes) + " entries, got " +
                              std::to_string(cfg.ranks.size()));
    for (std::size_t k = 0; k < modes; ++k) {
        if (cfg.ranks[k] == 0) throw ValidationError(field("ranks", k) + ": must be at least 1");
        if (cfg.ranks[k] > dims[k + 1])
            throw ValidationError(field("ranks", k) + ": rank " + std::to_string(cfg.ranks[k]) +
                                  " exceeds mode extent " + std::to_string(dims[k + 1]));
    }
    if (cfg.max_iters == 0) throw ValidationError("max_iters: must be at least 1");
    if (!(cfg.tol > 0.0)) throw ValidationError("tol: must be positive");
    if (!cfg.lambda.empty() && cfg.lambda.size() != modes)
        throw ValidationError("lambda: expected " + std::to_string(modes) + " entries");
    for (std::size_t k = 0; k < cfg.lambda.size(); ++k)
        if (!(cfg.lambda[k] >= 0.0)) throw ValidationError(field("lambda", k) + ": must be >= 0");
    if (cfg.factor_measurement_mode &&
        (cfg.measurement_rank == 0 || cfg.measurement_rank > dims[0]))
        throw ValidationError("measurement_rank: must be in [1, " + std::to_string(dims[0]) + "]");
    if (cfg.engine == SubspaceEngine::hebbian) {
        if (!(cfg.hebbian.eta >= 0.0)) throw ValidationError("hebbian.eta: must be >= 0");
        if (cfg.hebbian.epochs == 0) throw ValidationError("hebbian.epochs: must be at least 1");
        if (!(cfg.hebbian.tol > 0.0)) throw ValidationError("hebbian.tol: must be positive");
    }
}

ModeUpdate svd_step(const Tensor& x, std::size_t mode, std::size_t rank) {
    EigenPairs ep = leading_eigenpairs(gram_left(unfold(x, mode)), rank);
    ModeUpdate u;
    u.factor = std::move(ep.vectors);
    u.forward = u.factor.transpose();
    return u;
}

AlsResult run_als(const Tensor& centered, const TrainingConfig& cfg, const SubspaceStep& step) {
    validate(cfg, centered.dims());
    if (!std::all_of(centered.values().begin(), centered.values().end(),
                     [](double v) { return std::isfinite(v); }))
        throw NonFiniteError("training data has non-finite entries");
    return Driver(centered, cfg, step).run();
}

CausalModel make_model(AlsResult&& result, const Vector& mean, const TrainingConfig& cfg) {
    CausalModel model;
    model.core = std::move(result.core);
    for (std::size_t m = 1; m < result.modes.size(); ++m)
        model.factors.push_back(std::move(result.modes[m].factor));
    if (cfg.factor_measurement_mode) model.measurement_basis = std::move(result.modes[0].factor);
    model.mean = mean;
    model.ranks = cfg.ranks;
    model.kernels.assign(model.factors.size(), KernelSpec{});
    model.provenance = std::move(result.provenance);
    return model;
}

CausalModel m_mode_svd(const Tensor& d, const TrainingConfig& cfg) {
    validate(cfg, d.dims());
    Centered c = center_observations(d);
    SubspaceStep step;
    if (cfg.engine == SubspaceEngine::svd) {
        step = [](const Tensor& x, std::size_t m, std::size_t r, const ModeUpdate&) {
            return svd_step(x, m, r);
        };
    } else {
        step = [&cfg](const Tensor& x, std::size_t m, std::size_t r, const ModeUpdate& prev) {
            HebbianResult h = hebbian_subspace(unfold(x, m), r, cfg.hebbian, &prev.factor);
            ModeUpdate u;
            u.factor = std::move(h.v);
            u.forward = u.factor.transpose();
            if (!h.converged)
                u.warnings.push_back("hebbian learner for mode " + std::to_string(m) +
                                     " stopped at the epoch limit");
            return u;
        };
    }
    CausalModel model = make_model(run_als(c.data, cfg, step), c.mean, cfg);
    model.provenance.algorithm = "m-mode-svd";
    return model;
}

Tensor als_update_x(const AlsState& s, std::size_t mode, Schedule schedule) {
    const std::size_t modes = s.data.order() - 1;
    if (mode == 0 || mode > modes)
        throw DimensionError("als_update_x: mode must be in [1, " + std::to_string(modes) + "]");
    check_factors(s.data.dims(), s.factors, "als_update_x");

    auto stale = [](std::size_t m) {
        return DimensionError("als_update_x: stale state, X does not match the factors in mode " +
                              std::to_string(m));
    };

    switch (schedule) {
        case Schedule::parallel: {
            Tensor x = s.data;
            for (std::size_t n = 1; n <= modes; ++n)
                if (n != mode) x = mode_multiply(x, s.factors[n - 1].transpose(), n);
            return x;
        }
        case Schedule::asynchronous: {
            if (s.x.size() != modes || s.previous.size() != modes)
                throw DimensionError("als_update_x: asynchronous update needs X and previous factors");
            Tensor x = s.x[mode - 1];
            if (x.order() != s.data.order() || x.dims()[mode] != s.data.dims()[mode]) throw stale(mode);
            for (std::size_t n = 1; n <= modes; ++n) {
                if (n == mode) continue;
                const Matrix& prev = s.previous[n - 1];
                if (x.dims()[n] != static_cast<std::size_t>(prev.cols())) throw stale(n);
                x = mode_multiply(x, s.factors[n - 1].transpose() * prev, n);
            }
            return x;
        }
        case Schedule::sequential: {
            if (modes == 1) return s.data;
            if (s.x.size() != modes)
                throw DimensionError("als_update_x: sequential update needs the previous X");
            std::size_t p = mode == 1 ? modes : mode - 1;
            const Tensor& xp = s.x[p - 1];
            if (xp.order() != s.data.order() || xp.dims()[p] != s.data.dims()[p]) throw stale(p);
            if (xp.dims()[mode] != static_cast<std::size_t>(s.factors[mode - 1].cols()))
                throw stale(mode);
            Tensor x = mode_multiply(xp, s.factors[p - 1].transpose(), p);
            return mode_multiply(x, s.factors[mode - 1], mode);
        }
    }
    throw ValidationError("schedule: unsupported value");
}

Tensor compute_extended_core(const Tensor& d, std::span<const Matrix> factors, CoreMethod method,
                             const HebbianConfig& autoencoder) {
    check_factors(d.dims(), factors, "compute_extended_core");
    if (method == CoreMethod::tensor_autoencoder)
        return core_via_autoencoder(d, factors, autoencoder).core;
    Tensor core = d;
    for (std::size_t k = 0; k < factors.size(); ++k)
        core = mode_multiply(core, left_inverse(factors[k]), k + 1);
    return core;
}

Tensor reconstruct(const Tensor& core, std::span<const Matrix> factors) {
    if (core.order() != factors.size() + 1)
        throw DimensionError("reconstruct: core order does not match the factor count");
    Tensor out = core;
    for (std::size_t k = 0; k < factors.size(); ++k) out = mode_multiply(out, factors[k], k + 1);
    return out;
}

double cost_evaluate(const Tensor& d, const CausalModel& model, std::span<const double> lambda) {
    check_factors(d.dims(), model.factors, "cost_evaluate");
    if (d.dims()[0] != model.measurement_dim())
        throw DimensionError("cost_evaluate: measurement dimension mismatch");
    if (!lambda.empty() && lambda.size() != model.factors.size())
        throw DimensionError("cost_evaluate: need one lambda per causal mode");
    Tensor recon = reconstruct(model.core, model.factors);
    auto r = recon.mode0();
    if (model.mean.size()) r.colwise() += model.mean;
    double cost = (d.mode0() - r).norm();
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        const Matrix& u = model.factors[k];
        cost += lambda[k] * (u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).norm();
    }
    return cost;
}

Vector synthesize(const Tensor& core, std::span<const Vector> reps, const Vector& mean) {
    if (core.order() != reps.size() + 1)
        throw DimensionError("synthesize: need " + std::to_string(core.order() - 1) +
                             " representations, got " + std::to_string(reps.size()));
    for (std::size_t k = 0; k < reps.size(); ++k)
        if (static_cast<std::size_t>(reps[k].size()) != core.dims()[k + 1])
            throw DimensionError("synthesize: representation " + std::to_string(k + 1) +
                                 " has length " + std::to_string(reps[k].size()) +
                                 ", core rank is " + std::to_string(core.dims()[k + 1]));
    Vector out = core.mode0() * kronecker_reversed(reps);
    if (mean.size()) {
        if (mean.size() != out.size()) throw DimensionError("synthesize: mean length mismatch");
        out += mean;
    }
    return out;
}

Vector synthesize(const CausalModel& model, std::span<const Vector> reps) {
    return synthesize(model.core, reps, model.mean);
}

}  // namespace mfa

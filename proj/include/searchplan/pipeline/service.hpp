#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "searchplan/allocation.hpp"
#include "searchplan/bayes.hpp"
#include "searchplan/io/png.hpp"
#include "searchplan/io/snapshot.hpp"
#include "searchplan/pipeline/increments.hpp"
#include "searchplan/pipeline/run.hpp"

namespace searchplan::pipeline {

/// Interactive planning sessions over a fixed base configuration. Each session
/// starts from the configured prior; increments, undo and allocation requests
/// operate on that session's chain. One writer per session, concurrent readers.
class PlanningService {
 public:
  explicit PlanningService(RunConfig config)
      : config_(std::move(config)), env_(Environment::load(config_)), grid_(config_.grid()),
        prior_(build_prior(config_, env_)) {
    install_routes();
  }

  PlanningService(const PlanningService&) = delete;
  PlanningService& operator=(const PlanningService&) = delete;

  const ParticleSet& prior() const { return prior_; }
  const GridSpec& grid() const { return grid_; }
  httplib::Server& server() { return server_; }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  int bind_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }

 private:
  struct Step {
    std::string label;
    std::string kind;
    json description;
    ParticleSet particles;
    std::string digest;
  };

  struct Session {
    std::string id;
    mutable std::shared_mutex mutex;
    std::vector<Step> steps;
  };

  class BadRequest : public std::runtime_error {
    using std::runtime_error::runtime_error;
  };
  class NotFound : public std::runtime_error {
    using std::runtime_error::runtime_error;
  };

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  std::shared_ptr<Session> find(const std::string& id) const {
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("no session '" + id + "'");
    return it->second;
  }

  json step_summary(std::size_t index, const Step& s) const {
    const CellProbabilityMap map = grid_aggregate(s.particles, grid_);
    const auto peak = std::max_element(map.cells.begin(), map.cells.end());
    const auto peak_idx = static_cast<std::size_t>(peak - map.cells.begin());
    return {{"step", index},
            {"label", s.label},
            {"kind", s.kind},
            {"digest", s.digest},
            {"particles", s.particles.size()},
            {"grid", {{"nx", grid_.nx()}, {"ny", grid_.ny()}, {"cell_size_m", grid_.cell_size_m}}},
            {"peak_cell", {{"cell_x", peak_idx % grid_.nx()}, {"cell_y", peak_idx / grid_.nx()}, {"probability", *peak}}},
            {"off_extent", map.off_extent}};
  }

  json session_json(const Session& s) const {
    json chain = json::array();
    for (std::size_t i = 0; i < s.steps.size(); ++i) chain.push_back(step_summary(i, s.steps[i]));
    return {{"id", s.id}, {"steps", s.steps.size()}, {"chain", chain}};
  }

  static std::size_t step_param(const httplib::Request& req, const Session& s) {
    if (!req.has_param("step")) return s.steps.size() - 1;
    const std::size_t k = std::stoul(req.get_param_value("step"));
    if (k >= s.steps.size()) throw NotFound("no step " + std::to_string(k));
    return k;
  }

  static json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw BadRequest(std::string("malformed JSON body: ") + e.what());
    }
  }

  template <class Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const NotFound& e) {
      send_json(res, 404, {{"error", e.what()}});
    } catch (const BadRequest& e) {
      send_json(res, 400, {{"error", "validation failed"}, {"details", e.what()}});
    } catch (const std::invalid_argument& e) {
      send_json(res, 400, {{"error", "validation failed"}, {"details", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  }

  void install_routes() {
    server_.Post("/v1/sessions", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        auto s = std::make_shared<Session>();
        s->id = "s" + std::to_string(++next_id_);
        s->steps.push_back({"prior", "prior", json::object(), prior_, io::sha256_hex(io::snapshot_string(prior_))});
        {
          std::lock_guard lock(sessions_mutex_);
          sessions_[s->id] = s;
        }
        send_json(res, 201, session_json(*s));
      });
    });

    server_.Get("/v1/sessions", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        json ids = json::array();
        std::lock_guard lock(sessions_mutex_);
        for (const auto& [id, s] : sessions_) ids.push_back(id);
        send_json(res, 200, {{"sessions", ids}});
      });
    });

    server_.Get(R"(/v1/sessions/([\w-]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto s = find(req.matches[1]);
        std::shared_lock lock(s->mutex);
        send_json(res, 200, session_json(*s));
      });
    });

    server_.Get(R"(/v1/sessions/([\w-]+)/chain)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto s = find(req.matches[1]);
        std::shared_lock lock(s->mutex);
        json chain = json::array();
        for (std::size_t i = 0; i < s->steps.size(); ++i) {
          json entry = step_summary(i, s->steps[i]);
          entry["description"] = s->steps[i].description;
          chain.push_back(entry);
        }
        send_json(res, 200, {{"id", s->id}, {"chain", chain}});
      });
    });

    server_.Post(R"(/v1/sessions/([\w-]+)/increments)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto s = find(req.matches[1]);
        const json desc = parse_body(req);
        const PreparedIncrement inc = prepare_increment(desc, config_);  // 400 on bad input
        std::unique_lock lock(s->mutex);
        const RunContext ctx{&config_, &env_};
        try {
          const IncrementResult r = compute_failures(inc, s->steps.back().particles, ctx);
          ParticleSet post = bayes_update(s->steps.back().particles, r);
          const std::string digest = io::sha256_hex(io::snapshot_string(post));
          s->steps.push_back({inc.label, inc.kind, desc, std::move(post), digest});
        } catch (const std::exception& e) {
          send_json(res, 500, {{"error", e.what()}, {"stage", inc.label}});
          return;
        }
        send_json(res, 200, {{"id", s->id},
                             {"steps", s->steps.size()},
                             {"posterior", step_summary(s->steps.size() - 1, s->steps.back())}});
      });
    });

    server_.Post(R"(/v1/sessions/([\w-]+)/undo)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto s = find(req.matches[1]);
        const json body = parse_body(req);
        std::unique_lock lock(s->mutex);
        const std::size_t last = s->steps.size() - 1;
        const std::size_t target = body.contains("step") ? body.at("step").get<std::size_t>() : (last > 0 ? last - 1 : 0);
        if (target > last) throw BadRequest("cannot undo to step " + std::to_string(target));
        s->steps.resize(target + 1);
        send_json(res, 200, session_json(*s));
      });
    });

    server_.Get(R"(/v1/sessions/([\w-]+)/heatmap\.png)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto s = find(req.matches[1]);
        std::shared_lock lock(s->mutex);
        const auto& ps = s->steps[step_param(req, *s)].particles;
        res.set_content(io::encode_png(render_heatmap(grid_aggregate(ps, grid_))), "image/png");
      });
    });

    server_.Get(R"(/v1/sessions/([\w-]+)/heatmap\.csv)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto s = find(req.matches[1]);
        std::shared_lock lock(s->mutex);
        std::ostringstream out;
        write_map_csv(out, grid_aggregate(s->steps[step_param(req, *s)].particles, grid_));
        res.set_content(out.str(), "text/csv");
      });
    });

    server_.Get(R"(/v1/sessions/([\w-]+)/snapshot\.csv)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto s = find(req.matches[1]);
        std::shared_lock lock(s->mutex);
        res.set_content(io::snapshot_string(s->steps[step_param(req, *s)].particles), "text/csv");
      });
    });

    // What-if allocation over the current posterior grid; never mutates the chain.
    server_.Post(R"(/v1/sessions/([\w-]+)/allocation)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto s = find(req.matches[1]);
        const json body = parse_body(req);
        if (!body.contains("budget")) throw BadRequest("'budget' is required");
        const double budget = body.at("budget").get<double>();
        const double rho = body.value("rho", 1.0);
        if (!(budget >= 0.0)) throw BadRequest("budget must be >= 0");
        if (!(rho > 0.0)) throw BadRequest("rho must be > 0");
        std::shared_lock lock(s->mutex);
        const CellProbabilityMap map = grid_aggregate(s->steps.back().particles, grid_);
        const CellPrior prior = cell_prior_from_map(map);
        const std::vector<DetectionFunction> det(prior.size(), ExponentialDetection{rho});
        const Allocation alloc = optimize(prior, det, budget);
        const AllocationValue value = evaluate(alloc, prior, det);
        json cells = json::array();
        for (std::size_t j = 0; j < alloc.effort.size(); ++j) {
          if (alloc.effort[j] > 0.0)
            cells.push_back({{"cell_x", j % grid_.nx()}, {"cell_y", j / grid_.nx()}, {"effort", alloc.effort[j]}});
        }
        send_json(res, 200, {{"budget", budget},
                             {"rho", rho},
                             {"step", s->steps.size() - 1},
                             {"probability", value.probability},
                             {"cost", value.cost},
                             {"cells", cells}});
      });
    });
  }

  RunConfig config_;
  Environment env_;
  GridSpec grid_;
  ParticleSet prior_;
  httplib::Server server_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> next_id_{0};
};

}  // namespace searchplan::pipeline

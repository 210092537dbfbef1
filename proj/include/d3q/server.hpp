#pragma once

#include <string>

// Eigen before httplib: <resolv.h> defines a _res macro that breaks Eigen.
#include "d3q/service.hpp"

#include "httplib.h"
#include "json.hpp"

namespace d3q {

namespace detail {

inline void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Runs a handler and maps service errors onto HTTP statuses.
template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    reply(res, 200, f());
  } catch (const NotFound& e) {
    reply(res, 404, {{"error", "NotFound"}, {"message", e.what()}});
  } catch (const SessionClosed& e) {
    reply(res, 409, {{"error", "SessionClosed"}, {"message", e.what()}});
  } catch (const NoAgents& e) {
    reply(res, 503, {{"error", "NoAgents"}, {"message", e.what()}});
  } catch (const nlohmann::json::exception& e) {
    reply(res, 400, {{"error", "BadRequest"}, {"message", e.what()}});
  } catch (const std::invalid_argument& e) {
    reply(res, 400, {{"error", "BadRequest"}, {"message", e.what()}});
  }
}

}  // namespace detail

// POST /sessions, POST /sessions/{id}/turns, POST /sessions/{id}/close,
// GET /sessions/{id}, GET /results. Bodies are JSON.
inline void mount_service(httplib::Server& server, EvalService& svc) {
  using httplib::Request;
  using httplib::Response;
  server.Post("/sessions", [&svc](const Request&, Response& res) {
    detail::guarded(res, [&] { return svc.open_session(); });
  });
  server.Post(R"(/sessions/([^/]+)/turns)", [&svc](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      const auto body = nlohmann::json::parse(req.body);
      return svc.user_turn(req.matches[1], body.at("utterance").get<std::string>());
    });
  });
  server.Post(R"(/sessions/([^/]+)/close)", [&svc](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      const auto body = nlohmann::json::parse(req.body);
      return svc.close_session(req.matches[1], body.at("verdict").get<std::string>());
    });
  });
  server.Get(R"(/sessions/([^/]+))", [&svc](const Request& req, Response& res) {
    detail::guarded(res, [&] { return svc.session_view(req.matches[1]); });
  });
  server.Get("/results", [&svc](const Request&, Response& res) {
    detail::guarded(res, [&] { return svc.results(); });
  });
}

}  // namespace d3q

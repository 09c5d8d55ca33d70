#pragma once

#include <string>

#include "atsalign/annotate/service.hpp"

namespace httplib {
class Server;
}

namespace atsalign::annotate {

/// Routes:
///   POST /session                 {login_id, seed?, request_id?}
///   GET  /session/{id}/current
///   POST /session/{id}/next       {request_id?}
///   POST /session/{id}/back       {request_id?}
///   POST /session/{id}/choice     {view_id, side, request_id?}
///   POST /session/{id}/submit     {request_id?}
///   GET  /export?group=&since=&until=
void register_routes(httplib::Server& server, AnnotationService& service);

/// Blocks serving on host:port until the server is stopped.
void serve(AnnotationService& service, const std::string& host, int port);

}  // namespace atsalign::annotate

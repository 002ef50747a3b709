#pragma once

#include <string>

namespace httplib {
class Server;
}

namespace vulnesis {

class Workbench;

/// Installs the JSON/CSV/GeoJSON endpoints on `server`. Handlers only
/// translate between HTTP and Workbench calls; module errors become
/// {"error": {"code", "message", "status"}} with the mapped status.
void register_routes(httplib::Server& server, Workbench& workbench);

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// "host:port", ":port" or "port".
BindAddress parse_bind(const std::string& text);

/// Blocks until the server stops. Throws Error{BindFailure}.
void serve(Workbench& workbench, const BindAddress& address);

}  // namespace vulnesis

#pragma once

#include <chrono>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "qpsbgd/qubo.hpp"

namespace qpsbgd {

struct SamplerEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8080 or http://host/prefix
  std::optional<std::string> auth_token;
  int num_reads = 100;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{100};  // doubled after every failed attempt

  void validate() const;
};

/// Reported and recomputed energies may differ by at most this much,
/// relative to max(1, |energy|).
inline constexpr double kRemoteEnergyTolerance = 1e-6;

/// Request body of POST {base_url}/solve. The wire form is a plain Ising
/// model: quadratic entries [i, j, 2 Q_ij] for i < j, linear s, and the
/// diagonal of Q folded into the offset, so sum J g g + h g + offset
/// reproduces energy(problem, g).
nlohmann::json encode_request(const QuboProblem& problem, int num_reads);

/// Inverse of encode_request (for servers); throws ProtocolError.
QuboProblem decode_request(const nlohmann::json& body);

/// Checks a response body against `problem`, recomputes every energy and
/// drops samples whose reported energy disagrees. Throws ProtocolError on a
/// malformed body and IntegrityError when no sample survives.
SolveResult validate_response(const QuboProblem& problem, const nlohmann::json& body);

/// POSTs the problem and validates the answer. Connection failures,
/// timeouts and 5xx replies are retried with exponential backoff before a
/// TransportError is thrown. Requests to the same base_url are serialized.
SolveResult remote_solve(const QuboProblem& problem, const SamplerEndpoint& endpoint);

class RemoteSolver final : public QuboSolver {
 public:
  explicit RemoteSolver(SamplerEndpoint endpoint);
  SolveResult solve(const QuboProblem& problem, std::uint64_t seed) const override;
  std::string name() const override { return "remote"; }
  const SamplerEndpoint& endpoint() const { return endpoint_; }

 private:
  SamplerEndpoint endpoint_;
};

}  // namespace qpsbgd

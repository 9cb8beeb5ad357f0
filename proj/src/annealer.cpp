#include "qpsbgd/annealer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "qpsbgd/errors.hpp"

namespace qpsbgd {

void SamplerEndpoint::validate() const {
  if (base_url.empty()) throw ConfigError("sampler endpoint: base_url is empty");
  if (base_url.rfind("http://", 0) != 0) throw ConfigError("sampler endpoint: only http:// URLs are supported");
  if (num_reads < 1) throw ConfigError("sampler endpoint: num_reads must be >= 1");
  if (timeout.count() <= 0) throw ConfigError("sampler endpoint: timeout must be positive");
  if (max_retries < 0) throw ConfigError("sampler endpoint: max_retries must be >= 0");
}

nlohmann::json encode_request(const QuboProblem& problem, int num_reads) {
  const Matrix& q = problem.quadratic();
  const Index n = q.rows();
  nlohmann::json quadratic = nlohmann::json::array();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (q(i, j) != 0.0) quadratic.push_back({i, j, 2.0 * q(i, j)});
    }
  }
  std::vector<double> linear(problem.linear().data(), problem.linear().data() + n);
  return {{"n", n},
          {"linear", linear},
          {"quadratic", quadratic},
          {"offset", problem.offset() + q.trace()},
          {"num_reads", num_reads}};
}

QuboProblem decode_request(const nlohmann::json& body) {
  try {
    const Index n = body.at("n").get<Index>();
    if (n < 0) throw ProtocolError("request: negative n");
    const auto linear = body.at("linear").get<std::vector<double>>();
    if (static_cast<Index>(linear.size()) != n) throw ProtocolError("request: linear has wrong length");
    Matrix q = Matrix::Zero(n, n);
    for (const auto& entry : body.at("quadratic")) {
      const Index i = entry.at(0).get<Index>();
      const Index j = entry.at(1).get<Index>();
      if (!(0 <= i && i < j && j < n)) throw ProtocolError("request: quadratic index out of order or range");
      q(i, j) = q(j, i) = entry.at(2).get<double>() / 2.0;
    }
    return QuboProblem(std::move(q), Eigen::Map<const Vector>(linear.data(), n), body.at("offset").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed request: ") + e.what());
  }
}

SolveResult validate_response(const QuboProblem& problem, const nlohmann::json& body) {
  std::vector<std::vector<int>> spins;
  std::vector<double> reported;
  try {
    spins = body.at("samples").get<std::vector<std::vector<int>>>();
    reported = body.at("energies").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed sampler response: ") + e.what());
  }
  if (spins.size() != reported.size()) throw ProtocolError("sampler response: samples and energies differ in count");
  if (spins.empty()) throw ProtocolError("sampler response holds no samples");

  SolveResult result;
  result.reads = static_cast<int>(spins.size());
  for (std::size_t r = 0; r < spins.size(); ++r) {
    if (spins[r].size() != problem.size()) throw ProtocolError("sampler response: sample has wrong length");
    if (std::any_of(spins[r].begin(), spins[r].end(), [](int v) { return v != 1 && v != -1; })) {
      throw ProtocolError("sampler response: sample entries must be +1 or -1");
    }
    SpinVector g(std::move(spins[r]));
    const double e = energy(problem, g);
    if (!(std::abs(reported[r] - e) <= kRemoteEnergyTolerance * std::max(1.0, std::abs(e)))) continue;
    result.samples.push_back({std::move(g), e});
  }
  if (result.samples.empty()) {
    throw IntegrityError("all " + std::to_string(result.reads) + " sampler results report inconsistent energies");
  }
  std::sort(result.samples.begin(), result.samples.end(), [](const Sample& a, const Sample& b) {
    return a.energy != b.energy ? a.energy < b.energy : a.spins < b.spins;
  });
  result.best = result.samples.front().spins;
  result.best_energy = result.samples.front().energy;
  for (const Sample& s : result.samples) {
    if (preferred(s.energy, s.spins, result.best_energy, result.best)) {
      result.best = s.spins;
      result.best_energy = s.energy;
    }
  }
  return result;
}

namespace {

std::mutex& endpoint_lock(const std::string& base_url) {
  static std::mutex registry_lock;
  static std::map<std::string, std::unique_ptr<std::mutex>> locks;
  const std::lock_guard guard(registry_lock);
  auto& slot = locks[base_url];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

// "http://host:port/prefix" -> ("http://host:port", "/prefix")
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

}  // namespace

SolveResult remote_solve(const QuboProblem& problem, const SamplerEndpoint& endpoint) {
  endpoint.validate();
  const auto [host, prefix] = split_url(endpoint.base_url);
  const std::string body = encode_request(problem, endpoint.num_reads).dump();

  httplib::Headers headers;
  if (endpoint.auth_token) headers.emplace("Authorization", "Bearer " + *endpoint.auth_token);

  const std::lock_guard serial(endpoint_lock(endpoint.base_url));
  httplib::Client client(host);
  client.set_connection_timeout(endpoint.timeout);
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);

  std::string last_failure;
  auto backoff = endpoint.initial_backoff;
  for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    const auto response = client.Post(prefix + "/solve", headers, body, "application/json");
    if (!response) {
      last_failure = httplib::to_string(response.error());
      continue;
    }
    if (response->status >= 500) {
      last_failure = "HTTP " + std::to_string(response->status);
      continue;
    }
    if (response->status != 200) {
      throw ProtocolError("sampler at " + endpoint.base_url + " answered HTTP " + std::to_string(response->status) +
                          ": " + response->body);
    }
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(response->body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("sampler response is not JSON: ") + e.what());
    }
    return validate_response(problem, parsed);
  }
  throw TransportError("sampler at " + endpoint.base_url + " unreachable after " +
                       std::to_string(endpoint.max_retries + 1) + " attempts: " + last_failure);
}

RemoteSolver::RemoteSolver(SamplerEndpoint endpoint) : endpoint_(std::move(endpoint)) { endpoint_.validate(); }

SolveResult RemoteSolver::solve(const QuboProblem& problem, std::uint64_t) const {
  return remote_solve(problem, endpoint_);
}

}  // namespace qpsbgd

#include <boost/asio.hpp>
#include <cctype>
#include <cmath>
#include <json.hpp>
#include <string>

#include "skylite/core/error.hpp"
#include "skylite/reward/reward.hpp"

namespace skylite::reward {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// uniform in [-1, 1) from the top 53 bits
double signed_unit(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
}

Embedding random_vector(std::uint64_t state) {
  Embedding v(kMockDimension);
  for (double& x : v) x = signed_unit(state);
  return v;
}

void normalize(Embedding& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
}

// rough per-feature scales so no single entry dominates the projection
constexpr double kFeatureScale[StateFeatures::kSize] = {30.0, 1.75, 0.35, 50.0, 10.0, 1.0};
constexpr double kCollisionWeight = 3.0;

}  // namespace

MockProvider::MockProvider(std::uint64_t seed) : seed_(seed) {
  for (std::size_t i = 0; i < StateFeatures::kSize; ++i) {
    if (i == StateFeatures::Collision) {
      Embedding c = token_vector("collided");
      normalize(c);
      for (double& x : c) x *= kCollisionWeight;
      columns_.push_back(std::move(c));
    } else {
      columns_.push_back(random_vector(seed_ ^ (0xF00Dull + i)));
    }
  }
  bias_ = random_vector(seed_ ^ 0xB1A5ull);
}

Embedding MockProvider::token_vector(std::string_view token) const {
  return random_vector(seed_ ^ fnv1a(token));
}

Embedding MockProvider::embed_text(std::string_view text) const {
  Embedding out(kMockDimension, 0.0);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const Embedding t = token_vector(token);
    for (std::size_t i = 0; i < kMockDimension; ++i) out[i] += t[i];
    token.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  double n = 0.0;
  for (double x : out) n += x * x;
  if (n == 0.0) out = token_vector("");
  normalize(out);
  return out;
}

Embedding MockProvider::embed_state(const StateFeatures& features) const {
  Embedding out = bias_;
  for (std::size_t i = 0; i < StateFeatures::kSize; ++i) {
    const double f = features.values[i] / kFeatureScale[i];
    for (std::size_t k = 0; k < kMockDimension; ++k) out[k] += f * columns_[i][k];
  }
  double n = 0.0;
  for (double x : out) n += x * x;
  if (n == 0.0) out = bias_;
  normalize(out);
  return out;
}

std::unique_ptr<EmbeddingProvider> mock_provider(std::uint64_t seed) {
  return std::make_unique<MockProvider>(seed);
}

SocketProvider::SocketProvider(std::string host, std::uint16_t port, std::size_t dimension)
    : host_(std::move(host)), port_(port), dimension_(dimension) {}

Embedding SocketProvider::request(const std::string& line) const {
  namespace asio = boost::asio;
  using asio::ip::tcp;
  try {
    asio::io_context io;
    tcp::socket sock(io);
    asio::connect(sock, tcp::resolver(io).resolve(host_, std::to_string(port_)));
    asio::write(sock, asio::buffer(line + "\n"));
    std::string reply;
    asio::read_until(sock, asio::dynamic_buffer(reply), '\n');
    const auto j = nlohmann::json::parse(reply.substr(0, reply.find('\n')));
    Embedding v = j.get<Embedding>();
    if (v.size() != dimension_)
      throw Error(ErrorCode::ProviderFailure, "provider returned " + std::to_string(v.size()) +
                                                  " numbers, expected " + std::to_string(dimension_));
    double n = 0.0;
    for (double x : v) n += x * x;
    if (std::fabs(std::sqrt(n) - 1.0) > 1e-9) throw Error(ErrorCode::ProviderFailure, "provider vector is not unit length");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ProviderFailure, std::string("embedding service: ") + e.what());
  }
}

Embedding SocketProvider::embed_text(std::string_view text) const {
  return request(nlohmann::json{{"kind", "text"}, {"payload", text}}.dump());
}

Embedding SocketProvider::embed_state(const StateFeatures& features) const {
  return request(nlohmann::json{{"kind", "features"}, {"payload", features.values}}.dump());
}

}  // namespace skylite::reward

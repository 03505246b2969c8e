#include "discern/external_model.hpp"

#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <csignal>
#include <cstring>
#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "discern/error.hpp"

namespace discern {

namespace {

std::vector<double> parse_numbers(std::string_view text, ErrorCode on_error, const std::string& context) {
  std::vector<double> out;
  for (const auto& field : csv::split_line(text)) {
    const auto v = csv::parse_double(field);
    if (!v) throw Error(on_error, context + ": bad number '" + field + "'");
    out.push_back(*v);
  }
  return out;
}

// Checks a probability vector and rescales it to sum to exactly one
// (within rounding).
std::vector<double> checked_probabilities(std::vector<double> p, std::size_t k, ErrorCode on_error,
                                          const std::string& context) {
  if (p.size() != k) {
    throw Error(on_error, context + ": expected " + std::to_string(k) + " probabilities, got " +
                              std::to_string(p.size()));
  }
  double sum = 0.0;
  for (const auto v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(on_error, context + ": probability outside [0,1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw Error(on_error, context + ": probabilities do not sum to 1");
  for (auto& v : p) v /= sum;
  return p;
}

}  // namespace

std::string serialize_instance(std::span<const double> values) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, values[i]);
    out.append(buf, ptr);
  }
  return out;
}

// ------------------------------------------------------------ PredictionTable

PredictionTable::PredictionTable(std::size_t num_classes, std::map<std::string, std::vector<double>> rows)
    : num_classes_(num_classes), rows_(std::move(rows)) {
  if (num_classes_ < 2) throw Error(ErrorCode::InvalidArgument, "prediction table needs >= 2 classes");
  for (auto& [key, p] : rows_) {
    p = checked_probabilities(std::move(p), num_classes_, ErrorCode::InvalidArgument, "table row " + key);
  }
}

std::vector<double> PredictionTable::do_predict_proba(std::span<const double> x) const {
  const auto key = serialize_instance(x);
  const auto it = rows_.find(key);
  if (it == rows_.end()) throw Error(ErrorCode::LookupMiss, "no prediction for instance [" + key + "]");
  return it->second;
}

// ------------------------------------------------------- SubprocessClassifier

SubprocessClassifier::SubprocessClassifier(std::size_t num_classes, const std::string& command)
    : num_classes_(num_classes) {
  if (num_classes_ < 2) throw Error(ErrorCode::InvalidArgument, "subprocess model needs >= 2 classes");
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
    throw Error(ErrorCode::Io, "socketpair failed: " + std::string(std::strerror(errno)));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw Error(ErrorCode::Io, "fork failed");
  }
  if (pid == 0) {
    ::close(fds[0]);
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::close(fds[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  socket_ = fds[0];
  pid_ = pid;
}

SubprocessClassifier::~SubprocessClassifier() {
  if (socket_ >= 0) {
    ::shutdown(socket_, SHUT_RDWR);
    ::close(socket_);
  }
  if (pid_ > 0) {
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == 0) {
      ::kill(pid_, SIGTERM);
      ::waitpid(pid_, &status, 0);
    }
  }
}

std::vector<double> SubprocessClassifier::do_predict_proba(std::span<const double> x) const {
  std::lock_guard lock(mutex_);
  const std::string request = serialize_instance(x) + "\n";
  std::size_t sent = 0;
  while (sent < request.size()) {
    const auto n = ::send(socket_, request.data() + sent, request.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(ErrorCode::ProtocolViolation, "model process closed its input");
    sent += static_cast<std::size_t>(n);
  }
  std::size_t newline;
  while ((newline = buffer_.find('\n')) == std::string::npos) {
    char chunk[4096];
    const auto n = ::recv(socket_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(ErrorCode::ProtocolViolation, "model process closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
  std::string line = buffer_.substr(0, newline);
  buffer_.erase(0, newline + 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return checked_probabilities(parse_numbers(line, ErrorCode::ProtocolViolation, "model reply"), num_classes_,
                               ErrorCode::ProtocolViolation, "model reply");
}

// -------------------------------------------------------------------- loader

std::unique_ptr<Classifier> external_model_adapter(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open adapter file '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  const auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      const auto t = csv::trim(line);
      if (t.empty() || t.front() == '#') continue;
      line = std::string(t);
      return true;
    }
    return false;
  };
  const auto bad = [&](const std::string& what) {
    return Error(ErrorCode::BadConfig, path.string() + ":" + std::to_string(line_no) + ": " + what);
  };

  if (!next_line() || line != "discern-adapter 1") throw bad("expected 'discern-adapter 1'");
  if (!next_line() || line.rfind("classes ", 0) != 0) throw bad("expected 'classes <k>'");
  const auto k = csv::parse_double(line.substr(8));
  if (!k || *k < 2 || *k != std::floor(*k)) throw bad("class count must be an integer >= 2");
  const auto num_classes = static_cast<std::size_t>(*k);
  if (!next_line() || line.rfind("mode ", 0) != 0) throw bad("expected 'mode table|subprocess'");
  const auto mode = std::string(csv::trim(line.substr(5)));

  if (mode == "subprocess") {
    if (!next_line() || line.rfind("command ", 0) != 0) throw bad("expected 'command <shell command>'");
    return std::make_unique<SubprocessClassifier>(num_classes, std::string(csv::trim(line.substr(8))));
  }
  if (mode != "table") throw bad("unknown mode '" + mode + "'");
  std::map<std::string, std::vector<double>> rows;
  while (next_line()) {
    const auto arrow = line.find("=>");
    if (arrow == std::string::npos) throw bad("expected '<values> => <probabilities>'");
    const auto context = path.string() + ":" + std::to_string(line_no);
    const auto values = parse_numbers(line.substr(0, arrow), ErrorCode::BadConfig, context);
    auto probs = parse_numbers(line.substr(arrow + 2), ErrorCode::BadConfig, context);
    rows[serialize_instance(values)] =
        checked_probabilities(std::move(probs), num_classes, ErrorCode::BadConfig, context);
  }
  return std::make_unique<PredictionTable>(num_classes, std::move(rows));
}

}  // namespace discern

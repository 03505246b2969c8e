#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "discern/classifier.hpp"

namespace discern {

// Canonical text key of a normalised instance: comma-separated values in
// shortest round-trip form.
std::string serialize_instance(std::span<const double> values);

// Classifier backed by a fixed table of instance -> probabilities. Probing an
// instance not in the table throws LookupMiss.
class PredictionTable final : public Classifier {
 public:
  PredictionTable(std::size_t num_classes, std::map<std::string, std::vector<double>> rows);

  std::size_t num_classes() const override { return num_classes_; }
  std::size_t size() const noexcept { return rows_.size(); }

 protected:
  std::vector<double> do_predict_proba(std::span<const double> x) const override;

 private:
  std::size_t num_classes_;
  std::map<std::string, std::vector<double>> rows_;
};

// Classifier served by a child process over a line protocol: the engine
// writes one instance per line (comma-separated normalised values) to the
// child's stdin and reads one line of comma-separated class probabilities
// from its stdout. Calls are serialised.
class SubprocessClassifier final : public Classifier {
 public:
  SubprocessClassifier(std::size_t num_classes, const std::string& command);
  ~SubprocessClassifier() override;
  SubprocessClassifier(const SubprocessClassifier&) = delete;
  SubprocessClassifier& operator=(const SubprocessClassifier&) = delete;

  std::size_t num_classes() const override { return num_classes_; }

 protected:
  std::vector<double> do_predict_proba(std::span<const double> x) const override;

 private:
  std::size_t num_classes_;
  int socket_ = -1;
  int pid_ = -1;
  mutable std::mutex mutex_;
  mutable std::string buffer_;
};

// Adapter file format:
//   discern-adapter 1
//   classes <k>
//   mode table                     | mode subprocess
//   <v1>,...,<vm> => <p0>,...,<pk-1>   (table rows, one per line)
//   command <shell command>            (subprocess)
std::unique_ptr<Classifier> external_model_adapter(const std::filesystem::path& path);

}  // namespace discern

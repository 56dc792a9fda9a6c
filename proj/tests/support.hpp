#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spacesteer/workspace.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path data_dir() { return SPACESTEER_TEST_DATA_DIR; }
inline fs::path fixture_dir() { return SPACESTEER_TEST_FIXTURE_DIR; }

inline std::string crescent_path() { return (data_dir() / "workspaces" / "crescent.json").string(); }
inline std::string literature_path() {
  return (data_dir() / "workspaces" / "literature_review.json").string();
}
inline std::string crescent_template_path() { return (data_dir() / "template_crescent.json").string(); }
inline std::string literature_template_path() {
  return (data_dir() / "template_literature_review.json").string();
}
inline std::string rubric_path() { return (data_dir() / "rubric_default.json").string(); }

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("spacesteer-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Random valid workspaces. Bodies are whitespace separated words (some
// multi-byte, some with quotes or escapes); highlights cover whole words so
// spans never split a UTF-8 sequence.
class WorkspaceGen {
 public:
  explicit WorkspaceGen(std::uint64_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  std::string word() {
    static const std::vector<std::string> words = {
        "carpet", "harbor", "train",  "Queens", "April",    "caf\xc3\xa9",   "\xe6\x9d\xb1\xe4\xba\xac",
        "a\"b",   "tab\tx", "back\\", "NYSE",   "29",       "C-4",           "Ramazi",
        "\xf0\x9f\x9a\x82", "line\nbreak", "{json}", "[x]", "Hani al-Hallak", "x"};
    return words[static_cast<std::size_t>(uniform(0, static_cast<int>(words.size()) - 1))];
  }

  std::string sentence(int min_words, int max_words) {
    std::string s;
    const int n = uniform(min_words, max_words);
    for (int i = 0; i < n; ++i) {
      if (i) s += ' ';
      s += word();
    }
    return s;
  }

  spacesteer::Workspace workspace(int max_docs = 12) {
    using namespace spacesteer;
    Workspace w;
    const int n_docs = uniform(0, max_docs);
    for (int i = 0; i < n_docs; ++i) {
      Document d;
      d.id = "doc_" + std::to_string(i) + (coin(0.2) ? "\xc3\xa9" : "");
      d.body = sentence(1, 30);
      if (coin(0.3)) d.title = sentence(1, 4);
      w.documents.push_back(std::move(d));
    }
    for (const auto& d : w.documents) {
      if (coin(0.6)) w.relevant.push_back(d.id);
    }
    if (!w.documents.empty()) {
      const int n_hl = uniform(0, 10);
      for (int i = 0; i < n_hl; ++i) {
        const auto& d = w.documents[static_cast<std::size_t>(uniform(0, n_docs - 1))];
        // Pick a word range on space boundaries.
        std::vector<std::size_t> starts{0};
        for (std::size_t k = 0; k < d.body.size(); ++k) {
          if (d.body[k] == ' ') starts.push_back(k + 1);
        }
        const std::size_t a = starts[static_cast<std::size_t>(uniform(0, static_cast<int>(starts.size()) - 1))];
        std::size_t b = d.body.find(' ', a);
        if (b == std::string::npos) b = d.body.size();
        if (b == a) continue;
        w.highlights.push_back({d.id, a, b, d.body.substr(a, b - a)});
      }
    }
    const int n_clusters = uniform(0, 4);
    std::vector<std::string> pool;
    for (const auto& d : w.documents) pool.push_back(d.id);
    std::shuffle(pool.begin(), pool.end(), rng_);
    for (int c = 0; c < n_clusters; ++c) {
      Cluster cl;
      cl.id = "c" + std::to_string(c);
      if (coin(0.7)) cl.name = sentence(1, 3);
      const int take = pool.empty() ? 0 : uniform(0, static_cast<int>(pool.size()));
      for (int k = 0; k < take; ++k) {
        cl.members.push_back(pool.back());
        pool.pop_back();
      }
      w.clusters.push_back(std::move(cl));
    }
    std::vector<std::string> targets;
    for (const auto& d : w.documents) targets.push_back(d.id);
    for (const auto& c : w.clusters) targets.push_back(c.id);
    if (!targets.empty()) {
      const int n_ann = uniform(0, 5);
      for (int i = 0; i < n_ann; ++i) {
        w.annotations.push_back(
            {targets[static_cast<std::size_t>(uniform(0, static_cast<int>(targets.size()) - 1))],
             sentence(1, 8)});
      }
    }
    std::vector<ObjectRef> ends;
    for (const auto& d : w.documents) ends.push_back(ObjectRef::document(d.id));
    for (const auto& c : w.clusters) ends.push_back(ObjectRef::cluster(c.id));
    for (const auto& h : w.highlights) ends.push_back(ObjectRef::text(h.text));
    if (ends.size() >= 2) {
      const int n_conn = uniform(0, 6);
      for (int i = 0; i < n_conn; ++i) {
        const auto& s = ends[static_cast<std::size_t>(uniform(0, static_cast<int>(ends.size()) - 1))];
        const auto& t = ends[static_cast<std::size_t>(uniform(0, static_cast<int>(ends.size()) - 1))];
        if (s == t) continue;
        Connection c{s, t, std::nullopt};
        if (coin(0.6)) c.label = sentence(1, 3);
        w.connections.push_back(std::move(c));
      }
    }
    return w;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace testing_support

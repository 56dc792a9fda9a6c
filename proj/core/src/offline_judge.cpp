#include <cstdint>

#include "json_io.hpp"
#include "spacesteer/digest.hpp"
#include "spacesteer/harness.hpp"

namespace spacesteer {

namespace {

std::uint64_t hash_prefix(const std::string& hex) {
  return std::stoull(hex.substr(0, 15), nullptr, 16);
}

const std::string& last_user_content(const CompletionRequest& request) {
  static const std::string kEmpty;
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == Role::User) return it->content;
  }
  return kEmpty;
}

}  // namespace

std::shared_ptr<MockProvider> make_offline_provider(const Rubric& rubric) {
  return std::make_shared<MockProvider>([rubric](const CompletionRequest& request) {
    const std::string& system = request.messages.front().content;
    const std::string& user = last_user_content(request);

    if (system == kGradingSystemPrompt) {
      detail::ordered_json grades = detail::ordered_json::object();
      for (std::size_t i = 0; i < rubric.items.size(); ++i) {
        const auto& options = rubric.items[i].allowed_scores;
        const auto h = hash_prefix(sha256_hex(user + "#" + std::to_string(i + 1)));
        grades["Q" + std::to_string(i + 1)] = options[h % options.size()].score;
      }
      return "```json\n" + detail::dump(grades, 2) + "\n```";
    }

    if (system == kQuestionSystemPrompt) {
      const std::string report_digest = sha256_hex(user);
      std::string answers;
      for (std::size_t i = 0; i < rubric.items.size(); ++i) {
        if (i) answers += "\n";
        answers += "A" + std::to_string(i + 1) + ". offline answer " +
                   report_digest.substr(i % 48, 16);
      }
      return answers.empty() ? std::string("No questions.") : answers;
    }

    const std::string digest = request_digest(request);
    return "Bottom Line Up Front: offline summary " + digest.substr(0, 16) + " over " +
           std::to_string(request.messages.size()) + " prompt messages.";
  });
}

}  // namespace spacesteer

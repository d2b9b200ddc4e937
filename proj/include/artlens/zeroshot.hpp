#ifndef ARTLENS_ZEROSHOT_HPP
#define ARTLENS_ZEROSHOT_HPP

#include <cctype>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"
#include "simcore.hpp"
#include "store.hpp"

namespace artlens {

inline constexpr std::string_view kStyleTemplate = "A painting in the <class> style.";
inline constexpr std::string_view kGenreTemplate = "A <genre> painting.";

namespace detail {

struct Placeholder {
  std::size_t pos;
  std::size_t len;
};

/// Tokens of the form <name> where name is [A-Za-z0-9_]+.
inline std::vector<Placeholder> find_placeholders(std::string_view tmpl) {
  std::vector<Placeholder> out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '<') continue;
    std::size_t j = i + 1;
    while (j < tmpl.size() &&
           (std::isalnum(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_'))
      ++j;
    if (j > i + 1 && j < tmpl.size() && tmpl[j] == '>') {
      out.push_back({i, j - i + 1});
      i = j;
    }
  }
  return out;
}

} // namespace detail

/// Default template for a task name; other tasks fall back to the style form.
inline std::string default_template(std::string_view task) {
  return std::string(task == "genre" ? kGenreTemplate : kStyleTemplate);
}

/// One prompt per class, in class order, with the template's single
/// placeholder replaced by the class name.
inline std::vector<std::string> build_prompts(const LabelSpace& labelspace,
                                              std::string_view tmpl) {
  const auto holes = detail::find_placeholders(tmpl);
  if (holes.size() != 1)
    throw ArgumentError("prompt template must contain exactly one <placeholder>, found " +
                        std::to_string(holes.size()) + ": \"" + std::string(tmpl) + "\"");
  const auto [pos, len] = holes.front();
  std::vector<std::string> prompts;
  prompts.reserve(labelspace.size());
  for (const auto& cls : labelspace.classes()) {
    std::string p(tmpl);
    p.replace(pos, len, cls);
    prompts.push_back(std::move(p));
  }
  return prompts;
}

/// Per-class text embeddings for one task; row k belongs to class k.
class PromptBank {
public:
  PromptBank(LabelSpace labelspace, std::string tmpl, Matrix<float> embeddings)
      : labelspace_(std::move(labelspace)),
        template_(std::move(tmpl)),
        prompts_(build_prompts(labelspace_, template_)),
        embeddings_(std::move(embeddings)),
        norms_(row_norms(embeddings_)) {
    if (embeddings_.rows() != labelspace_.size())
      throw DimensionError("prompt bank has " + std::to_string(embeddings_.rows()) +
                           " rows for " + std::to_string(labelspace_.size()) + " classes");
    for (std::size_t k = 0; k < norms_.size(); ++k)
      if (!(norms_[k] > 0.0))
        throw InvariantError("prompt embedding for class '" + labelspace_.name(k) + "' is zero");
  }

  const std::string& task() const noexcept { return labelspace_.task(); }
  const LabelSpace& labelspace() const noexcept { return labelspace_; }
  const std::string& prompt_template() const noexcept { return template_; }
  const std::vector<std::string>& prompts() const noexcept { return prompts_; }
  const Matrix<float>& embeddings() const noexcept { return embeddings_; }
  std::span<const double> norms() const noexcept { return norms_; }
  std::size_t dim() const noexcept { return embeddings_.cols(); }

  /// Same bank with rows permuted into `target` class order. The class sets
  /// must coincide.
  PromptBank aligned_to(const LabelSpace& target) const {
    if (target.size() != labelspace_.size())
      throw InvariantError("prompt bank classes do not match label space '" + target.task() + "'");
    Matrix<float> rows(target.size(), dim());
    for (std::size_t k = 0; k < target.size(); ++k) {
      const auto src = labelspace_.find(target.name(k));
      if (!src)
        throw InvariantError("prompt bank has no class '" + target.name(k) + "'");
      const auto row = embeddings_.row(*src);
      std::copy(row.begin(), row.end(), rows.row(k).begin());
    }
    return PromptBank(target, template_, std::move(rows));
  }

private:
  LabelSpace labelspace_;
  std::string template_;
  std::vector<std::string> prompts_;
  Matrix<float> embeddings_;
  std::vector<double> norms_;
};

/// Best class and its cosine score.
template <typename T>
ScoredHit score_zero_shot(std::span<const T> image, const PromptBank& bank) {
  if (image.size() != bank.dim())
    throw DimensionError("zero-shot: image dim " + std::to_string(image.size()) +
                         " vs bank dim " + std::to_string(bank.dim()));
  return top_k(image, bank.embeddings(), bank.norms(), 1, ScanOptions{.threads = 1}).front();
}

/// argmax_k cosine(image, t_k); ties go to the lowest class index.
template <typename T>
std::size_t classify_zero_shot(std::span<const T> image, const PromptBank& bank) {
  return score_zero_shot(image, bank).row_index;
}

template <typename T>
std::size_t classify_zero_shot(const std::vector<T>& image, const PromptBank& bank) {
  return classify_zero_shot(std::span<const T>(image), bank);
}

// ---------------------------------------------------------------------------
// Persistence: a prompt bank is an EMB1 store with header
// {"kind": "prompt_bank", "task": ..., "template": ...} and one row per class
// (id = class name, labels = {task: class name}).

inline EmbeddingSet bank_to_store(const PromptBank& bank) {
  EmbeddingSet set(bank.dim());
  set.attributes() = {{"kind", "prompt_bank"}, {"task", bank.task()},
                      {"template", bank.prompt_template()}};
  for (std::size_t k = 0; k < bank.labelspace().size(); ++k) {
    const auto& cls = bank.labelspace().name(k);
    set.add(RowMeta{cls, {{bank.task(), cls}}}, bank.embeddings().row(k));
  }
  return set;
}

inline PromptBank bank_from_store(const EmbeddingSet& set) {
  const auto& attrs = set.attributes();
  auto kind = attrs.find("kind");
  if (kind == attrs.end() || kind->second != "prompt_bank")
    throw FormatError("store is not a prompt bank (missing header kind=prompt_bank)");
  auto task = attrs.find("task");
  auto tmpl = attrs.find("template");
  if (task == attrs.end() || tmpl == attrs.end())
    throw FormatError("prompt bank header must record task and template");
  std::vector<std::string> classes;
  for (const auto& m : set.meta()) classes.push_back(m.id);
  return PromptBank(LabelSpace(task->second, std::move(classes)), tmpl->second, set.vectors());
}

inline void write_bank(const PromptBank& bank, const std::filesystem::path& path) {
  write_store(bank_to_store(bank), path);
}

inline PromptBank read_bank(const std::filesystem::path& path) {
  return bank_from_store(read_store(path));
}

} // namespace artlens

#endif // ARTLENS_ZEROSHOT_HPP

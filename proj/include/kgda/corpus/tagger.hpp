#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "kgda/corpus/document.hpp"

namespace kgda::corpus {

enum class Pos { noun, adj, adv, other };

Pos parse_pos(const std::string& s);  // NOUN / ADJ / ADV / OTHER

// Decides which tokens count as content words (the ones worth looking up
// in the concept graph).
class ContentTagger {
  public:
    virtual ~ContentTagger() = default;
    virtual bool is_content(const std::string& token) const = 0;
};

// Lexicon-backed tagger: a token is content when the lexicon lists it as a
// noun, adjective, or adverb. Unlisted tokens are not content.
class LexiconTagger : public ContentTagger {
  public:
    explicit LexiconTagger(std::unordered_map<std::string, Pos> entries)
        : entries_(std::move(entries)) {}

    // Tab-separated `word<TAB>POS`; later duplicates overwrite earlier ones.
    static LexiconTagger load(const std::string& path);

    bool is_content(const std::string& token) const override;

    std::size_t size() const { return entries_.size(); }

  private:
    std::unordered_map<std::string, Pos> entries_;
};

// Sorted unique content words of a document. A precomputed list on the
// document is returned verbatim, bypassing the tagger.
std::vector<std::string> content_words(const Document& doc, const ContentTagger& tagger);

}  // namespace kgda::corpus

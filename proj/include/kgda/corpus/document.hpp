#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgda::corpus {

enum class Label { negative = 0, positive = 1 };

const char* to_string(Label l);

// Review ratings collapse to binary sentiment: 1-3 negative, 4-5 positive.
Label label_from_rating(int rating);

struct Document {
    std::string id;
    std::string domain;
    std::string text;
    std::vector<std::string> tokens;
    std::optional<int> rating;
    std::optional<Label> label;
    // Pre-tagged content words override the tagger when present.
    std::optional<std::vector<std::string>> content;
};

// Lowercased ASCII alphanumeric runs; everything else separates.
std::vector<std::string> tokenize(std::string_view text);

// Tab-separated: id, domain, rating (1-5) or "pos"/"neg" or "?", text, and
// optionally a comma-separated content-word list. Tokens are filled from the
// text on load. Malformed lines raise ParseError naming the line number.
std::vector<Document> load_documents(const std::string& path);

void save_documents(const std::vector<Document>& docs, const std::string& path);

}  // namespace kgda::corpus

#include "kgda/corpus/tagger.hpp"

#include <algorithm>
#include <fstream>

#include "kgda/errors.hpp"

namespace kgda::corpus {

Pos parse_pos(const std::string& s) {
    if (s == "NOUN") return Pos::noun;
    if (s == "ADJ") return Pos::adj;
    if (s == "ADV") return Pos::adv;
    if (s == "OTHER") return Pos::other;
    throw ParseError("unknown part-of-speech tag: '" + s + "'");
}

LexiconTagger LexiconTagger::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open lexicon: " + path);
    std::unordered_map<std::string, Pos> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected word<TAB>POS");
        const std::string word = line.substr(0, tab);
        const std::string tag = line.substr(tab + 1);
        try {
            entries[word] = parse_pos(tag);
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return LexiconTagger(std::move(entries));
}

bool LexiconTagger::is_content(const std::string& token) const {
    auto it = entries_.find(token);
    return it != entries_.end() && it->second != Pos::other;
}

std::vector<std::string> content_words(const Document& doc, const ContentTagger& tagger) {
    if (doc.content) return *doc.content;
    std::vector<std::string> out;
    for (const std::string& tok : doc.tokens)
        if (tagger.is_content(tok)) out.push_back(tok);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace kgda::corpus

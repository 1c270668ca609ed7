#include "kgda/corpus/document.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kgda/errors.hpp"
#include "kgda/util/binio.hpp"

namespace kgda::corpus {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

[[noreturn]] void fail(const std::string& path, std::size_t line_no, const std::string& why) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + why);
}

void check_field(const std::string& path, const std::string& field) {
    if (field.find('\t') != std::string::npos || field.find('\n') != std::string::npos)
        throw ConfigError("field contains tab or newline, cannot serialize to " + path);
}

}  // namespace

const char* to_string(Label l) { return l == Label::positive ? "pos" : "neg"; }

Label label_from_rating(int rating) {
    if (rating >= 1 && rating <= 3) return Label::negative;
    if (rating == 4 || rating == 5) return Label::positive;
    throw DomainError("rating " + std::to_string(rating) + " outside 1..5");
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (c < 128 && std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<Document> load_documents(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open documents file: " + path);
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = split(line, '\t');
        if (fields.size() != 4 && fields.size() != 5)
            fail(path, line_no,
                 "expected 4 or 5 tab-separated fields, got " + std::to_string(fields.size()));
        Document d;
        d.id = fields[0];
        d.domain = fields[1];
        if (d.id.empty()) fail(path, line_no, "empty document id");
        if (d.domain.empty()) fail(path, line_no, "empty domain");
        const std::string& lab = fields[2];
        if (lab == "?") {
            // unlabeled
        } else if (lab == "pos") {
            d.label = Label::positive;
        } else if (lab == "neg") {
            d.label = Label::negative;
        } else {
            int rating = 0;
            auto [p, ec] = std::from_chars(lab.data(), lab.data() + lab.size(), rating);
            if (ec != std::errc() || p != lab.data() + lab.size())
                fail(path, line_no, "label field '" + lab + "' is not a rating, pos, neg, or ?");
            try {
                d.label = label_from_rating(rating);
            } catch (const DomainError& e) {
                fail(path, line_no, e.what());
            }
            d.rating = rating;
        }
        d.text = fields[3];
        d.tokens = tokenize(d.text);
        if (fields.size() == 5) {
            std::vector<std::string> content;
            for (auto& w : split(fields[4], ','))
                if (!w.empty()) content.push_back(w);
            d.content = std::move(content);
        }
        docs.push_back(std::move(d));
    }
    return docs;
}

void save_documents(const std::vector<Document>& docs, const std::string& path) {
    std::ostringstream out;
    for (const Document& d : docs) {
        check_field(path, d.id);
        check_field(path, d.domain);
        check_field(path, d.text);
        out << d.id << '\t' << d.domain << '\t';
        if (d.rating)
            out << *d.rating;
        else if (d.label)
            out << to_string(*d.label);
        else
            out << '?';
        out << '\t' << d.text;
        if (d.content) {
            out << '\t';
            for (std::size_t i = 0; i < d.content->size(); ++i) {
                if (i) out << ',';
                out << (*d.content)[i];
            }
        }
        out << '\n';
    }
    util::BinWriter w(path);
    const std::string s = out.str();
    w.raw(s.data(), s.size());
    w.commit();
}

}  // namespace kgda::corpus

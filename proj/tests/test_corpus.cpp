#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "kgda/corpus/bow.hpp"
#include "kgda/corpus/document.hpp"
#include "kgda/corpus/tagger.hpp"
#include "kgda/errors.hpp"
#include "kgda/util/binio.hpp"

using namespace kgda;
using namespace kgda::corpus;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    auto p = fs::temp_directory_path() / ("kgda_corpus_" + name);
    fs::remove(p);
    return p;
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream out(p);
    out << body;
}

std::string thrown_what(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
    CHECK(tokenize("The software came!") ==
          std::vector<std::string>{"the", "software", "came"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("screen-savers are OK") ==
          std::vector<std::string>{"screen", "savers", "are", "ok"});
    CHECK(tokenize("mp3 player v2.0") ==
          std::vector<std::string>{"mp3", "player", "v2", "0"});
    CHECK(tokenize("...!?") == std::vector<std::string>{});
    CHECK(tokenize("  spaced\tout\nlines  ") ==
          std::vector<std::string>{"spaced", "out", "lines"});
}

TEST_CASE("rating to label mapping is total on 1..5") {
    CHECK(label_from_rating(1) == Label::negative);
    CHECK(label_from_rating(2) == Label::negative);
    CHECK(label_from_rating(3) == Label::negative);
    CHECK(label_from_rating(4) == Label::positive);
    CHECK(label_from_rating(5) == Label::positive);
    CHECK_THROWS_AS(label_from_rating(0), DomainError);
    CHECK_THROWS_AS(label_from_rating(6), DomainError);
    CHECK(std::string(to_string(Label::positive)) == "pos");
    CHECK(std::string(to_string(Label::negative)) == "neg");
}

TEST_CASE("document file round trip") {
    auto in_path = temp_path("docs_in.tsv");
    write_file(in_path,
               "# header comment\n"
               "d1\tdvd\t5\tThe software came!\n"
               "d2\tdvd\t3\tbad bad product\n"
               "\n"
               "d3\tkitchen\tpos\tgreat pan\n"
               "d4\tkitchen\t?\tunlabeled target text\tpan,great\n"
               "d5\telectronics\tneg\tbroken\r\n");

    auto docs = load_documents(in_path.string());
    REQUIRE(docs.size() == 5);

    CHECK(docs[0].id == "d1");
    CHECK(docs[0].domain == "dvd");
    REQUIRE(docs[0].rating.has_value());
    CHECK(*docs[0].rating == 5);
    REQUIRE(docs[0].label.has_value());
    CHECK(*docs[0].label == Label::positive);
    CHECK(docs[0].tokens == std::vector<std::string>{"the", "software", "came"});
    CHECK_FALSE(docs[0].content.has_value());

    CHECK(*docs[1].label == Label::negative);
    CHECK(*docs[1].rating == 3);

    CHECK_FALSE(docs[2].rating.has_value());
    CHECK(*docs[2].label == Label::positive);

    CHECK_FALSE(docs[3].rating.has_value());
    CHECK_FALSE(docs[3].label.has_value());
    REQUIRE(docs[3].content.has_value());
    CHECK(*docs[3].content == std::vector<std::string>{"pan", "great"});

    CHECK(docs[4].text == "broken");
    CHECK(*docs[4].label == Label::negative);

    auto out_path = temp_path("docs_out.tsv");
    save_documents(docs, out_path.string());
    auto again = load_documents(out_path.string());
    REQUIRE(again.size() == docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        CHECK(again[i].id == docs[i].id);
        CHECK(again[i].domain == docs[i].domain);
        CHECK(again[i].text == docs[i].text);
        CHECK(again[i].tokens == docs[i].tokens);
        CHECK(again[i].rating == docs[i].rating);
        CHECK(again[i].label == docs[i].label);
        CHECK(again[i].content == docs[i].content);
    }

    auto empty_path = temp_path("docs_empty.tsv");
    write_file(empty_path, "# nothing here\n\n");
    CHECK(load_documents(empty_path.string()).empty());
}

TEST_CASE("document parsing reports the offending line") {
    auto p = temp_path("docs_bad.tsv");

    write_file(p, "only\ttwo\n");
    auto what = thrown_what([&] { load_documents(p.string()); });
    CHECK(what.find(":1:") != std::string::npos);

    write_file(p, "d1\tdvd\t5\tfine text\nd2\tdvd\t9\tbad rating\n");
    what = thrown_what([&] { load_documents(p.string()); });
    CHECK(what.find(":2:") != std::string::npos);

    write_file(p, "d1\tdvd\tmaybe\ttext\n");
    CHECK_THROWS_AS(load_documents(p.string()), ParseError);

    CHECK_THROWS_AS(load_documents(temp_path("no_such_file.tsv").string()), IoError);
}

TEST_CASE("save rejects fields that cannot be serialized") {
    Document d;
    d.id = "x";
    d.domain = "dvd";
    d.text = "has\tan embedded tab";
    CHECK_THROWS_AS(save_documents({d}, temp_path("docs_tab.tsv").string()),
                    ConfigError);
}

TEST_CASE("content words: precomputed list wins, tagger filters and sorts") {
    LexiconTagger tagger({{"decent", Pos::adj},
                          {"screen", Pos::noun},
                          {"quickly", Pos::adv},
                          {"the", Pos::other}});

    Document d;
    d.tokens = {"the", "decent", "screen", "decent", "unknownword"};
    CHECK(content_words(d, tagger) ==
          std::vector<std::string>{"decent", "screen"});

    Document pre;
    pre.tokens = {"ignored"};
    pre.content = std::vector<std::string>{"zeta", "alpha", "zeta"};
    CHECK(content_words(pre, tagger) ==
          std::vector<std::string>{"zeta", "alpha", "zeta"});

    Document empty;
    CHECK(content_words(empty, tagger).empty());

    Document adv;
    adv.tokens = {"quickly", "the"};
    CHECK(content_words(adv, tagger) == std::vector<std::string>{"quickly"});
}

TEST_CASE("lexicon tagger load and overwrite") {
    auto p = temp_path("lexicon.tsv");
    write_file(p,
               "# comment\n"
               "screen\tNOUN\n"
               "decent\tADJ\n"
               "well\tADV\n"
               "screen\tOTHER\n");
    auto tagger = LexiconTagger::load(p.string());
    CHECK(tagger.size() == 3);
    CHECK_FALSE(tagger.is_content("screen"));
    CHECK(tagger.is_content("decent"));
    CHECK(tagger.is_content("well"));
    CHECK_FALSE(tagger.is_content("absent"));

    write_file(p, "word\tVERB\n");
    auto what = thrown_what([&] { LexiconTagger::load(p.string()); });
    CHECK(what.find(":1:") != std::string::npos);

    CHECK(parse_pos("NOUN") == Pos::noun);
    CHECK(parse_pos("ADJ") == Pos::adj);
    CHECK(parse_pos("ADV") == Pos::adv);
    CHECK(parse_pos("OTHER") == Pos::other);
    CHECK_THROWS_AS(parse_pos("noun"), ParseError);
}

TEST_CASE("bundled lexicon tags review vocabulary") {
    auto tagger =
        LexiconTagger::load(std::string(KGDA_DATA_DIR) + "/pos_lexicon.tsv");
    CHECK(tagger.size() >= 300);

    Document d;
    d.tokens = {"the", "decent", "screen"};
    CHECK(content_words(d, tagger) ==
          std::vector<std::string>{"decent", "screen"});
}

TEST_CASE("terms: unigrams then adjacent bigrams") {
    CHECK(terms_of({"a", "b", "c"}) ==
          std::vector<std::string>{"a", "b", "c", "a b", "b c"});
    CHECK(terms_of({"solo"}) == std::vector<std::string>{"solo"});
    CHECK(terms_of({}) == std::vector<std::string>{});
}

TEST_CASE("vocabulary fit: df ordering, ties, idf values") {
    auto make = [](std::vector<std::string> tokens) {
        Document d;
        d.tokens = std::move(tokens);
        return d;
    };
    std::vector<Document> docs = {make({"a"}), make({"a", "b"}),
                                  make({"a", "b", "c"})};

    auto vocab = fit_vocab(docs, 10);
    // dfs: a=3, b=2, "a b"=2, c=1, "b c"=1; ties break lexicographically.
    REQUIRE(vocab.dim() == 5);
    CHECK(vocab.terms ==
          std::vector<std::string>{"a", "a b", "b", "b c", "c"});
    CHECK(vocab.idf[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vocab.idf[1] == doctest::Approx(1.2876820724517808).epsilon(1e-12));
    CHECK(vocab.idf[2] == doctest::Approx(1.2876820724517808).epsilon(1e-12));
    CHECK(vocab.idf[3] == doctest::Approx(1.6931471805599454).epsilon(1e-12));
    CHECK(vocab.idf[4] == doctest::Approx(1.6931471805599454).epsilon(1e-12));
    for (int i = 0; i < vocab.dim(); ++i)
        CHECK(vocab.index.at(vocab.terms[i]) == i);

    auto truncated = fit_vocab(docs, 2);
    CHECK(truncated.terms == std::vector<std::string>{"a", "a b"});

    CHECK_THROWS_AS(fit_vocab(std::vector<Document>{}, 5), ConfigError);
    CHECK_THROWS_AS(fit_vocab(docs, 0), ConfigError);
}

TEST_CASE("featurize matches hand oracle and normalizes") {
    BowVocab vocab;
    vocab.terms = {"a", "b", "c"};
    vocab.idf = {1.0, 1.2876820724517808, 1.6931471805599454};
    for (int i = 0; i < 3; ++i) vocab.index[vocab.terms[i]] = i;

    Document d;
    d.tokens = {"b", "a", "b", "c"};
    auto v = featurize(d, vocab);
    REQUIRE(v.size() == 3);
    CHECK(v[0] == doctest::Approx(0.30861775372414296).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(0.7948030974218354).epsilon(1e-12));
    CHECK(v[2] == doctest::Approx(0.5225352795887762).epsilon(1e-12));
    double norm = 0;
    for (double x : v) norm += x * x;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));

    Document oov;
    oov.tokens = {"nothing", "matches", "here"};
    auto zeros = featurize(oov, vocab);
    for (double x : zeros) CHECK(x == 0.0);

    Document dup = d;
    CHECK(featurize(dup, vocab) == v);
}

TEST_CASE("vocab serialization round trip") {
    auto make = [](std::vector<std::string> tokens) {
        Document d;
        d.tokens = std::move(tokens);
        return d;
    };
    std::vector<Document> docs = {make({"x", "y"}), make({"y", "z"})};
    auto vocab = fit_vocab(docs, 4);

    auto p = temp_path("vocab.bin");
    {
        util::BinWriter w(p.string());
        vocab.serialize(w);
        w.commit();
    }
    util::BinReader r(p.string());
    auto back = BowVocab::deserialize(r);
    CHECK(back.terms == vocab.terms);
    CHECK(back.idf == vocab.idf);
    CHECK(back.index.size() == vocab.index.size());
    for (const auto& [term, idx] : vocab.index)
        CHECK(back.index.at(term) == idx);
}

#include <filesystem>
#include <thread>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fdx/error.hpp"
#include "fdx/io.hpp"
#include "fdx/parallel.hpp"

using namespace fdx;
namespace fs = std::filesystem;

TEST(Hash, Fnv1aReferenceVectors) {
    EXPECT_EQ(io::fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(io::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(io::fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Hash, ConfigHashIgnoresKeyOrder) {
    const auto a = nlohmann::json::parse(R"({"b": 1, "a": [1, 2]})");
    const auto b = nlohmann::json::parse(R"({"a": [1, 2], "b": 1})");
    EXPECT_EQ(io::config_hash(a), io::config_hash(b));
    EXPECT_EQ(io::config_hash(a).size(), 16u);
}

TEST(Csv, Rfc4180Escaping) {
    EXPECT_EQ(io::csv_escape("plain"), "plain");
    EXPECT_EQ(io::csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(io::csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(io::csv_escape("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, TableLayout) {
    io::CsvTable t({"x", "label"});
    t.meta("class", "SetC");
    t.row({1.5, std::string("a,b")});
    t.row({io::Cell{2LL}, std::string("c")});
    EXPECT_EQ(t.str(), "# class: SetC\r\nx,label\r\n1.5,\"a,b\"\r\n2,c\r\n");
    EXPECT_THROW(t.row({1.0}), Error);
}

TEST(Csv, DoublesRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 2.7153464646307844e-21, -1e300}) EXPECT_EQ(std::stod(io::format_double(v)), v);
    EXPECT_EQ(io::format_double(std::nan("")), "nan");
}

TEST(Files, AtomicWriteAndMissingDirectory) {
    const fs::path dir = fs::temp_directory_path() / "fdx_io_test";
    fs::create_directories(dir);
    io::write_file_atomic(dir / "a.txt", "hello");
    EXPECT_EQ(io::read_file(dir / "a.txt"), "hello");
    EXPECT_FALSE(fs::exists(dir / "a.txt.tmp"));
    try {
        io::write_file_atomic(dir / "missing" / "b.txt", "x");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Io);
    }
    fs::remove_all(dir);
}

TEST(Files, JsonCarriesProvenance) {
    const fs::path dir = fs::temp_directory_path() / "fdx_io_test2";
    fs::create_directories(dir);
    io::write_json(dir / "x.json", {{"z", 1}, {"a", 2}}, {"9.9", "abcd", 42});
    const auto j = nlohmann::ordered_json::parse(io::read_file(dir / "x.json"));
    EXPECT_EQ(j.begin().key(), "_meta");
    EXPECT_EQ(j["_meta"]["seed"], 42);
    EXPECT_EQ(j["_meta"]["config_hash"], "abcd");
    auto it = j.begin();
    ++it;
    EXPECT_EQ(it.key(), "z");  // insertion order kept
    fs::remove_all(dir);
}

TEST(Svg, ClipsAndEscapes) {
    io::SvgPlot p(400, 300);
    p.set_limits(0, 1, 0, 1);
    p.set_labels("a < b", "x", "y");
    p.polyline({{0.1, 0.1}, {0.5, 0.5}, {2.0, 2.0}, {0.6, 0.6}, {0.7, 0.7}}, "red");
    p.comment("x -- y");
    const std::string s = p.str();
    EXPECT_NE(s.find("a &lt; b"), std::string::npos);
    EXPECT_NE(s.find("<!-- x - - y -->"), std::string::npos);
    // the out-of-range point breaks the path into two pieces
    std::size_t moves = 0;
    for (std::size_t k = s.find("d=\""); k != std::string::npos && s[k] != '/'; ++k)
        if (s[k] == 'M') ++moves;
    EXPECT_EQ(moves, 2u);
    EXPECT_THROW(p.set_limits(1, 0, 0, 1), Error);
}

TEST(Parallel, ResultsByIndexAndExceptions) {
    const auto v = parallel_map<int>(100, [](std::size_t i) { return static_cast<int>(i * i); }, 4);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], static_cast<int>(i * i));
    EXPECT_THROW(parallel_map<int>(10, [](std::size_t i) -> int {
                     if (i == 3) throw std::runtime_error("x");
                     return 0;
                 }, 3),
                 std::runtime_error);
}

#include <gtest/gtest.h>

#include <filesystem>

#include "copson/persistence.hpp"

using namespace copson;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("copson_persist_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Problem sample() {
    Problem pb;
    pb.params = {3.0, 1.5, 0.75};
    pb.u = WeightExpr({WeightTerm{1.0, 0.5, 0.0, 0.0, 0.0, 2.0}, WeightTerm{0.3, -0.25, 1.5, 0.0, 2.0, kInf}});
    pb.v = WeightExpr::exponential(2.0, 0.7);
    pb.w = WeightExpr({WeightTerm{1.0, 11.0 / 3.0, -1.5, 0.0, 0.0, 0.5}});
    pb.grid = {1e-5, 1e5, 7};
    pb.anchor = 0.1;
    pb.tol = 1e-9;
    return pb;
}

TEST(Canonical, SortedKeysNoWhitespace) {
    const Json a = Json::parse(R"({"b": [1, 2.5, "x"], "a": {"z": true, "y": null}})");
    EXPECT_EQ(canonical_dump(a), R"({"a":{"y":null,"z":true},"b":[1,2.5,"x"]})");
}

TEST(Canonical, DigestIgnoresKeyOrder) {
    const Json a = Json::parse(R"({"p": 2.0, "q": 1.0, "list": [3, 4]})");
    const Json b = Json::parse(R"({"list": [3, 4], "q": 1.0, "p": 2.0})");
    EXPECT_EQ(digest(a), digest(b));
    EXPECT_EQ(digest(a).size(), 16u);
    EXPECT_NE(digest(a), digest(Json::parse(R"({"p": 2.0, "q": 1.0, "list": [4, 3]})")));
}

TEST(Canonical, IntegerAndFloatDiffer) {
    EXPECT_NE(canonical_dump(Json(1)), canonical_dump(Json(1.0)));
    EXPECT_EQ(canonical_dump(Json(1.0)), "1.0");
}

TEST(Canonical, FormatDouble) {
    EXPECT_EQ(format_double(2.0), "2.0");
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(format_double(1e300), "1.0000000000000001e+300");
    EXPECT_EQ(format_double(kInf), "inf");
    EXPECT_EQ(format_double(-kInf), "-inf");
    for (double x : {0.1, 1.0 / 3.0, 2.718281828459045, 1e-310, 6.02214076e23})
        EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
}

TEST(Canonical, FnvKnownValues) {
    // Reference values of 64-bit FNV-1a.
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(ProblemJson, RoundTrip) {
    const auto pb = sample();
    const auto back = problem_from_json(parse_json_text(canonical_dump(to_json(pb))));
    EXPECT_EQ(back, pb);
    EXPECT_EQ(canonical_dump(to_json(back)), canonical_dump(to_json(pb)));
}

TEST(ProblemJson, InfinityAsString) {
    const auto j = to_json(sample());
    EXPECT_EQ(j.at("v").at(0).at("hi"), "inf");
}

TEST(ProblemJson, PointerDiagnostics) {
    auto j = to_json(sample());
    j["u"][1]["colour"] = 1.0;
    try {
        problem_from_json(j);
        FAIL();
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("/u/1/colour"), std::string::npos) << e.what();
    }
    j = to_json(sample());
    j["w"][0]["coef"] = "lots";
    try {
        problem_from_json(j);
        FAIL();
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("/w/0/coef"), std::string::npos) << e.what();
    }
    j = to_json(sample());
    j["params"]["p"] = 0.5;
    EXPECT_THROW(problem_from_json(j), InvalidInput);
    j = to_json(sample());
    j.erase("v");
    EXPECT_THROW(problem_from_json(j), InvalidInput);
}

TEST(ProblemJson, SyntaxErrorOffset) {
    try {
        parse_json_text(R"({"a": 1,, "b": 2})");
        FAIL();
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos) << e.what();
    }
}

TEST(SequenceJson, RoundTrip) {
    DiscretizingSequence s;
    s.t = {0.25, 1.0, 4.0, kInf};
    s.labels = {Label::K1, Label::K2, Label::K1};
    s.top = TopFlag::Zero;
    s.complete_high = true;
    s.first_index = -1;
    EXPECT_EQ(sequence_from_json(parse_json_text(canonical_dump(to_json(s)))), s);
}

TEST(Envelope, RoundTripAndByteStable) {
    TempDir d;
    const auto e = make_envelope(Json{{"seed", 3}}, Json{{"value", 1.0 / 3.0}, {"upper", num(kInf)}});
    write_report(e, d.path / "r.json");
    const auto back = read_report(d.path / "r.json");
    EXPECT_EQ(back, e);
    write_report(back, d.path / "r2.json");
    EXPECT_EQ(read_text(d.path / "r.json"), read_text(d.path / "r2.json"));
    EXPECT_EQ(e.schema_version, kSchemaVersion);
    EXPECT_EQ(e.config_digest, digest(Json{{"seed", 3}}));
}

TEST(Envelope, FutureSchemaRejected) {
    auto j = to_json(make_envelope(Json::object(), Json::object()));
    j["schema_version"] = kSchemaVersion + 1;
    EXPECT_THROW(envelope_from_json(j), IncompatibleSchema);
    j["schema_version"] = 0;
    EXPECT_THROW(envelope_from_json(j), InvalidInput);
    j.erase("payload");
    EXPECT_THROW(envelope_from_json(j), InvalidInput);
}

TEST(Envelope, SourceDateEpochPinsTimestamp) {
    ::setenv("SOURCE_DATE_EPOCH", "0", 1);
    EXPECT_EQ(utc_timestamp(), "1970-01-01T00:00:00Z");
    ::unsetenv("SOURCE_DATE_EPOCH");
}

TEST(AtomicWrite, NoTempFilesLeft) {
    TempDir d;
    write_text_atomic(d.path / "a.txt", "one");
    write_text_atomic(d.path / "a.txt", "two");
    EXPECT_EQ(read_text(d.path / "a.txt"), "two");
    int n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(d.path)) ++n;
    EXPECT_EQ(n, 1);
}

TEST(AtomicWrite, MissingDirectory) {
    EXPECT_THROW(write_text_atomic("/nonexistent_copson_dir/x.json", "x"), InvalidInput);
}

TEST(Csv, Quoting) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    CsvTable t{{"k", "v"}, {{"1", "x,y"}, {"2", "inf"}}};
    EXPECT_EQ(t.str(), "k,v\n1,\"x,y\"\n2,inf\n");
}

TEST(Csv, WidthMismatch) {
    CsvTable t{{"a", "b"}, {{"1"}}};
    EXPECT_THROW(t.str(), InvalidInput);
}

}  // namespace

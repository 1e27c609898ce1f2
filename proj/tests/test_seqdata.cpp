#include <doctest.h>

#include <seqsel/error.hpp>
#include <seqsel/seqdata.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>

using namespace seqsel;

namespace {

const char* kTable = "id,t1,t2,t3,outcome\n"
                     "a,1,2,3,x\n"
                     "b,2,2,1,y\n"
                     "c,10,1,1,x\n";

} // namespace

TEST_CASE("alphabet orders integer labels numerically")
{
    auto a = StateAlphabet::from_observed({"10", "2", "1"});
    CHECK(a.labels() == std::vector<std::string>{"1", "2", "10"});
    CHECK(a.index_of("10") == 2);
    CHECK_FALSE(a.index_of("3"));

    auto b = StateAlphabet::from_observed({"walk", "10", "sleep"});
    CHECK(b.labels() == std::vector<std::string>{"10", "sleep", "walk"});
}

TEST_CASE("alphabet rejects degenerate label sets")
{
    CHECK_THROWS_AS(StateAlphabet({"a"}), ValidationError);
    CHECK_THROWS_AS(StateAlphabet({"a", "a"}), ValidationError);
    CHECK_THROWS_AS(StateAlphabet({"a", ""}), ValidationError);
}

TEST_CASE("wide table round trip")
{
    auto ds = parse_sequences(kTable);
    REQUIRE(ds.n() == 3);
    REQUIRE(ds.p() == 3);
    CHECK(ds.q() == 4);
    CHECK(ds.position_names() == std::vector<std::string>{"t1", "t2", "t3"});
    CHECK(ds.ids() == std::vector<std::string>{"a", "b", "c"});
    CHECK(ds.alphabet().label(ds.state(2, 0)) == "10");
    REQUIRE(ds.outcome());
    CHECK(ds.outcome()->labels == std::vector<std::string>{"x", "y"});
    CHECK(ds.outcome()->classes == std::vector<int>{0, 1, 0});

    auto again = parse_sequences(format_sequences(ds));
    CHECK(again.states() == ds.states());
    CHECK(again.ids() == ds.ids());
    CHECK(again.outcome()->classes == ds.outcome()->classes);
}

TEST_CASE("outcome column is optional under its default name")
{
    auto ds = parse_sequences("id,t1,t2\na,1,2\nb,2,1\n");
    CHECK_FALSE(ds.outcome());
    CHECK(ds.p() == 2);

    TableFormat fmt;
    fmt.outcome_column = "group";
    CHECK_THROWS_AS(parse_sequences("id,t1,t2\na,1,2\nb,2,1\n", fmt), FormatError);
}

TEST_CASE("headerless table with positional columns")
{
    TableFormat fmt;
    fmt.header = false;
    fmt.id_column = "";
    fmt.outcome_column = "3";
    fmt.delimiter = '\t';
    auto ds = parse_sequences("A\tB\tg1\nB\tB\tg2\n", fmt);
    CHECK(ds.p() == 2);
    CHECK(ds.ids() == std::vector<std::string>{"seq1", "seq2"});
    CHECK(ds.position_names() == std::vector<std::string>{"pos1", "pos2"});
    CHECK(ds.outcome()->classes == std::vector<int>{0, 1});
}

TEST_CASE("malformed tables are rejected")
{
    CHECK_THROWS_AS(parse_sequences(""), ValidationError);
    CHECK_THROWS_AS(parse_sequences("id,t1\na,1\nb\n"), FormatError);
    CHECK_THROWS_AS(parse_sequences("id,t1,t2\na,1,\nb,1,2\n"), ValidationError);
    CHECK_THROWS_AS(parse_sequences("id,t1\n"), ValidationError);
    CHECK_THROWS_AS(parse_sequences("id,outcome\na,x\n"), ValidationError);

    TableFormat fmt;
    fmt.alphabet = StateAlphabet({"1", "2"});
    CHECK_THROWS_AS(parse_sequences("id,t1\na,1\nb,3\n", fmt), ValidationError);
}

TEST_CASE("one-hot design is position-major and drops unobserved states")
{
    auto ds = parse_sequences(kTable);
    auto X = encode_one_hot(ds);
    // t1 uses {1,2,10}, t2 uses {1,2}, t3 uses {1,3}
    CHECK(X.cols() == 7);
    CHECK(X.rows() == 3);
    CHECK(X.group_sizes() == std::vector<int>{3, 2, 2});
    CHECK(X.dropped().size() == 5);
    Eigen::MatrixXd dense = X.values();
    for (int i = 0; i < X.rows(); ++i) {
        CHECK(dense.row(i).sum() == doctest::Approx(3.0));
    }
    for (int c = 1; c < X.cols(); ++c) {
        CHECK(X.columns()[static_cast<std::size_t>(c - 1)] < X.columns()[static_cast<std::size_t>(c)]);
    }
    for (int i = 0; i < ds.n(); ++i) {
        auto decoded = X.decode_row(i);
        for (int j = 0; j < ds.p(); ++j) {
            CHECK(decoded[static_cast<std::size_t>(j)] == ds.state(i, j));
        }
    }

    auto full = encode_one_hot(ds, false);
    CHECK(full.cols() == 12);
    CHECK(full.dropped().empty());
}

TEST_CASE("restricting and subsetting the design")
{
    auto ds = parse_sequences(kTable);
    auto X = encode_one_hot(ds);
    std::vector<int> keep{2, 0};
    auto R = X.restrict_to_positions(keep);
    CHECK(R.positions() == std::vector<int>{0, 2});
    CHECK(R.cols() == 5);
    CHECK(R.num_positions() == 3);
    CHECK(R.group_sizes() == std::vector<int>{3, 0, 2});

    std::vector<int> rows{2, 0};
    auto S = X.select_rows(rows);
    CHECK(S.rows() == 2);
    CHECK(S.decode_row(0) == X.decode_row(2));

    std::vector<int> bad{7};
    CHECK_THROWS_AS(X.restrict_to_positions(bad), ValidationError);
}

TEST_CASE("label file aligned by id")
{
    auto ds = parse_sequences("id,t1,t2\na,1,2\nb,2,1\nc,1,1\n");
    const auto path = std::filesystem::temp_directory_path() / "seqsel_labels_test.csv";
    {
        std::ofstream out(path);
        out << "id,cluster\nc,2\na,10\nb,2\n";
    }
    auto outcome = load_outcome_for(ds, path);
    CHECK(outcome.labels == std::vector<std::string>{"2", "10"});
    CHECK(outcome.classes == std::vector<int>{1, 0, 0});
    {
        std::ofstream out(path);
        out << "id,cluster\na,1\n";
    }
    CHECK_THROWS_AS(load_outcome_for(ds, path), ValidationError);
    std::filesystem::remove(path);
}

TEST_CASE("alphabet file fixes the label order")
{
    const auto path = std::filesystem::temp_directory_path() / "seqsel_alphabet_test.txt";
    {
        std::ofstream out(path);
        out << "sleep\nwork\n\nleisure\n";
    }
    auto a = load_alphabet(path);
    CHECK(a.labels() == std::vector<std::string>{"sleep", "work", "leisure"});
    std::filesystem::remove(path);
}

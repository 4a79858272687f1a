#include "test_support.hpp"

#include <doctest.h>

#include <sstream>

using namespace psvae;
using psvae::test::encoded_from;
using psvae::test::random_rows;
using psvae::test::toy_schema;

namespace {

RawTable numeric_table(const std::string& name, const std::vector<double>& values) {
    RawTable t;
    RawColumn col;
    col.name = name;
    col.numeric = true;
    for (double v : values) {
        col.cells.push_back(format_double(v));
        col.values.push_back(v);
    }
    t.columns.push_back(std::move(col));
    return t;
}

RawTable text_table(const std::string& name, const std::vector<std::string>& cells) {
    RawTable t;
    RawColumn col;
    col.name = name;
    col.numeric = false;
    col.cells = cells;
    t.columns.push_back(std::move(col));
    return t;
}

} // namespace

TEST_CASE("csv round trip with quoting") {
    std::stringstream src;
    src << "name,note,x\n"
        << "plain,\"has, comma\",1.5\n"
        << "\"qu\"\"ote\",\"line\nbreak\",2\n";
    RawTable t = read_csv(src);
    REQUIRE(t.columns.size() == 3);
    CHECK(t.n_rows() == 2);
    CHECK(t.columns[1].cells[0] == "has, comma");
    CHECK(t.columns[0].cells[1] == "qu\"ote");
    CHECK(t.columns[1].cells[1] == "line\nbreak");
    CHECK(t.columns[2].numeric);
    CHECK(t.columns[2].values[0] == 1.5);
    CHECK_FALSE(t.columns[0].numeric);

    std::stringstream out;
    write_csv(out, t);
    std::stringstream again(out.str());
    RawTable t2 = read_csv(again);
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        CHECK(t.columns[c].cells == t2.columns[c].cells);
}

TEST_CASE("csv errors") {
    std::stringstream ragged("a,b\n1,2\n3\n");
    CHECK_THROWS_AS(read_csv(ragged), DataError);
    std::stringstream empty("");
    CHECK_THROWS_AS(read_csv(empty), DataError);
    std::stringstream unterminated("a\n\"open\n");
    CHECK_THROWS_AS(read_csv(unterminated), DataError);
}

TEST_CASE("bucket counts follow min(floor(sqrt(N)), cap)") {
    CHECK(bucket_count_for(4981) == 70);
    CHECK(bucket_count_for(253680) == 100);
    CHECK(bucket_count_for(100) == 10);
    CHECK(bucket_count_for(1) == 1);
    CHECK(bucket_count_for(99) == 9);
}

TEST_CASE("infer_schema makes distinct-rich numeric columns continuous") {
    std::vector<double> values(4981);
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = static_cast<double>(i) * 0.25;
    const TableSchema schema = infer_schema(numeric_table("x", values));
    REQUIRE(schema.columns.size() == 1);
    CHECK(schema.columns[0].kind == ColumnKind::continuous);
    CHECK(schema.columns[0].cardinality() == 70);
    CHECK(schema.columns[0].bucket_edges.front() == 0.0);
    CHECK(schema.columns[0].bucket_edges.back() == 4980 * 0.25);
    CHECK(schema.n_records == 4981);
    CHECK(schema.total_width() == 70);
}

TEST_CASE("infer_schema keeps low-cardinality numeric columns categorical") {
    std::vector<double> values(100);
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = static_cast<double>(i % 7);
    const TableSchema schema = infer_schema(numeric_table("x", values));
    CHECK(schema.columns[0].kind == ColumnKind::categorical);
    CHECK(schema.columns[0].cardinality() == 7);
}

TEST_CASE("infer_schema edge cases") {
    RawTable empty;
    CHECK_THROWS_AS(infer_schema(empty), DataError);

    const TableSchema single = infer_schema(text_table("k", {"same", "same", "same"}));
    CHECK(single.columns[0].cardinality() == 1);

    CHECK_THROWS_AS(infer_schema(text_table("k", {"a", "", "b"})), DataError);

    TypeOverrides unknown;
    unknown["missing"] = ColumnKind::categorical;
    CHECK_THROWS_AS(infer_schema(text_table("k", {"a", "b"}), 100, unknown), DataError);

    TypeOverrides force_cont;
    force_cont["k"] = ColumnKind::continuous;
    CHECK_THROWS_AS(infer_schema(text_table("k", {"a", "b"}), 100, force_cont), DataError);
}

TEST_CASE("type overrides flip the inferred kind") {
    std::vector<double> values(100);
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = static_cast<double>(i);

    TypeOverrides force_cat;
    force_cat["x"] = ColumnKind::categorical;
    const TableSchema cat = infer_schema(numeric_table("x", values), 100, force_cat);
    CHECK(cat.columns[0].kind == ColumnKind::categorical);
    CHECK(cat.columns[0].cardinality() == 100);

    std::vector<double> few(100);
    for (std::size_t i = 0; i < few.size(); ++i)
        few[i] = static_cast<double>(i % 12); // 12 distinct > 10 buckets? no: forces continuous
    TypeOverrides force_cont;
    force_cont["x"] = ColumnKind::continuous;
    const TableSchema cont = infer_schema(numeric_table("x", few), 100, force_cont);
    CHECK(cont.columns[0].kind == ColumnKind::continuous);
}

TEST_CASE("equal-frequency buckets stay balanced on distinct draws") {
    Rng rng(42);
    std::vector<double> values(1000);
    for (auto& v : values)
        v = rng.normal();
    const TableSchema schema = infer_schema(numeric_table("x", values));
    const auto& col = schema.columns[0];
    REQUIRE(col.kind == ColumnKind::continuous);
    const std::size_t buckets = col.cardinality();
    CHECK(buckets == 31);

    std::vector<std::size_t> counts(buckets, 0);
    for (double v : values)
        ++counts[bucket_index(col, v)];
    const double expected = 1000.0 / static_cast<double>(buckets);
    for (std::size_t b = 0; b < buckets; ++b)
        CHECK(std::abs(static_cast<double>(counts[b]) - expected) <= expected + 1.0);
}

TEST_CASE("encode produces one-hot groups") {
    TableSchema schema = toy_schema({3});
    schema.columns[0].categories = {"A", "B", "C"};
    RawTable t = text_table("c0", {"B"});
    const EncodedMatrix enc = encode(t, schema);
    const Eigen::MatrixXd dense = enc.dense();
    CHECK(dense.rows() == 1);
    CHECK(dense(0, 0) == 0.0);
    CHECK(dense(0, 1) == 1.0);
    CHECK(dense(0, 2) == 0.0);
}

TEST_CASE("continuous encode buckets by half-open intervals, last right-closed") {
    ColumnSchema col;
    col.name = "x";
    col.kind = ColumnKind::continuous;
    col.bucket_edges = {0.0, 2.0, 4.0};
    CHECK(bucket_index(col, 3.5) == 1);
    CHECK(bucket_index(col, 4.0) == 1);
    CHECK(bucket_index(col, 0.0) == 0);
    CHECK(bucket_index(col, 2.0) == 1);
    CHECK_THROWS_AS(bucket_index(col, 4.5), DataError);
    CHECK_THROWS_AS(bucket_index(col, std::nan("")), DataError);
    CHECK(bucket_index_clamped(col, -1.0) == 0);
    CHECK(bucket_index_clamped(col, 99.0) == 1);
}

TEST_CASE("encode errors name the column and label") {
    TableSchema schema = toy_schema({2});
    schema.columns[0].categories = {"A", "B"};
    RawTable t = text_table("c0", {"Z"});
    CHECK_THROWS_WITH_AS(encode(t, schema), doctest::Contains("c0"), DataError);
    CHECK_THROWS_WITH_AS(encode(t, schema), doctest::Contains("Z"), DataError);

    RawTable missing = text_table("c0", {""});
    CHECK_THROWS_AS(encode(missing, schema), DataError);
}

TEST_CASE("decode inverts the discretization") {
    Rng rng(1);
    ColumnSchema cont;
    cont.name = "x";
    cont.kind = ColumnKind::continuous;
    cont.bucket_edges = {2.0, 4.0};
    TableSchema schema;
    schema.columns = {cont};
    schema.n_records = 1;

    const auto mid = decode_row(std::vector<std::int32_t>{0}, schema, DecodeMode::midpoint, rng);
    CHECK(mid[0] == "3");

    TableSchema cats = toy_schema({2});
    cats.columns[0].categories = {"A", "B"};
    const auto lab = decode_row(std::vector<std::int32_t>{1}, cats, DecodeMode::midpoint, rng);
    CHECK(lab[0] == "B");

    ColumnSchema wide;
    wide.name = "y";
    wide.kind = ColumnKind::continuous;
    wide.bucket_edges = {0.0, 10.0};
    TableSchema ws;
    ws.columns = {wide};
    for (int i = 0; i < 50; ++i) {
        const auto cell = decode_row(std::vector<std::int32_t>{0}, ws, DecodeMode::uniform, rng);
        double v;
        REQUIRE(parse_double(cell[0], v));
        CHECK(v >= 0.0);
        CHECK(v < 10.0);
    }

    CHECK_THROWS_AS(decode_row(std::vector<std::int32_t>{5}, cats, DecodeMode::midpoint, rng),
                    DataError);
}

TEST_CASE("encode -> decode(midpoint) -> encode is the identity on indices") {
    Rng rng(7);
    RawTable t;
    t.columns.resize(2);
    t.columns[0].name = "cat";
    t.columns[1].name = "num";
    t.columns[1].numeric = true;
    for (int i = 0; i < 400; ++i) {
        t.columns[0].cells.push_back("k" + std::to_string(rng.below(5)));
        const double v = rng.normal() * 3.0;
        t.columns[1].cells.push_back(format_double(v));
        t.columns[1].values.push_back(v);
    }
    const TableSchema schema = infer_schema(t);
    REQUIRE(schema.columns[1].kind == ColumnKind::continuous);
    const EncodedMatrix enc = encode(t, schema);

    IndexRows rows;
    for (std::size_t r = 0; r < enc.rows(); ++r)
        rows.push_back(enc.index_row(r));
    Rng decode_rng(0);
    const RawTable decoded = decode_table(rows, schema, DecodeMode::midpoint, decode_rng);
    const EncodedMatrix enc2 = encode(decoded, schema);
    for (std::size_t r = 0; r < enc.rows(); ++r)
        for (std::size_t c = 0; c < enc.n_columns(); ++c)
            CHECK(enc.index(r, c) == enc2.index(r, c));
}

TEST_CASE("compute_weights follows N / (K * (count + 1))") {
    TableSchema schema = toy_schema({2});
    IndexRows rows(100, IndexRow{0});
    for (std::size_t i = 50; i < 100; ++i)
        rows[i][0] = 1;
    CategoryWeights w = compute_weights(encoded_from(rows, schema), schema);
    CHECK(w.per_column[0][0] == doctest::Approx(100.0 / (2 * 51)).epsilon(1e-12));
    CHECK(w.per_column[0][1] == doctest::Approx(100.0 / (2 * 51)).epsilon(1e-12));

    for (std::size_t i = 10; i < 50; ++i)
        rows[i][0] = 1; // 10 / 90 split
    w = compute_weights(encoded_from(rows, schema), schema);
    CHECK(w.per_column[0][0] == doctest::Approx(100.0 / (2 * 11)).epsilon(1e-12));
    CHECK(w.per_column[0][1] == doctest::Approx(100.0 / (2 * 91)).epsilon(1e-12));

    // empty category stays finite and positive
    TableSchema wide = toy_schema({3});
    IndexRows all_two(100, IndexRow{2});
    w = compute_weights(encoded_from(all_two, wide), wide);
    for (Eigen::Index i = 0; i < 3; ++i) {
        CHECK(std::isfinite(w.per_column[0][i]));
        CHECK(w.per_column[0][i] > 0.0);
    }
    // larger count implies strictly smaller weight
    CHECK(w.per_column[0][2] < w.per_column[0][0]);
}

TEST_CASE("weights are invariant to row order and dataset duplication") {
    Rng rng(11);
    const TableSchema schema = toy_schema({3, 4});
    IndexRows rows = random_rows(schema, 400, rng);
    const CategoryWeights base = compute_weights(encoded_from(rows, schema), schema);

    IndexRows shuffled = rows;
    rng.shuffle(shuffled);
    const CategoryWeights after_shuffle = compute_weights(encoded_from(shuffled, schema), schema);

    IndexRows doubled = rows;
    doubled.insert(doubled.end(), rows.begin(), rows.end());
    const CategoryWeights after_double = compute_weights(encoded_from(doubled, schema), schema);

    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        CHECK(base.per_column[c] == after_shuffle.per_column[c]);
        // the +1 smoothing makes duplication invariance hold only up to
        // O(1/count), so allow a small relative slack
        for (Eigen::Index i = 0; i < base.per_column[c].size(); ++i)
            CHECK(after_double.per_column[c][i] ==
                  doctest::Approx(base.per_column[c][i]).epsilon(0.02));
    }
}

TEST_CASE("marginals count categories exactly") {
    const TableSchema schema = toy_schema({3});
    IndexRows rows{{0}, {0}};
    const MarginalSet m = marginals_of(rows, schema);
    CHECK(m.total == 2);
    CHECK(m.counts[0][0] == 2);
    CHECK(m.counts[0][1] == 0);
    CHECK(m.counts[0][2] == 0);

    const MarginalSet empty = marginals_of(IndexRows{}, schema);
    CHECK(empty.total == 0);
    CHECK(empty.counts[0] == std::vector<std::int64_t>{0, 0, 0});
}

TEST_CASE("marginals are additive under concatenation") {
    Rng rng(3);
    const TableSchema schema = toy_schema({2, 5, 3});
    const IndexRows a = random_rows(schema, 40, rng);
    const IndexRows b = random_rows(schema, 25, rng);
    IndexRows both = a;
    both.insert(both.end(), b.begin(), b.end());

    const MarginalSet ma = marginals_of(a, schema);
    const MarginalSet mb = marginals_of(b, schema);
    const MarginalSet mc = marginals_of(both, schema);
    CHECK(mc.total == ma.total + mb.total);
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        std::int64_t col_sum = 0;
        for (std::size_t i = 0; i < mc.counts[c].size(); ++i) {
            CHECK(mc.counts[c][i] == ma.counts[c][i] + mb.counts[c][i]);
            col_sum += mc.counts[c][i];
        }
        CHECK(col_sum == mc.total);
    }
}

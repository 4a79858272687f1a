#include "test_support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace psvae;
using namespace psvae::test;

namespace {

ModelFile tiny_model(std::uint64_t seed) {
    Rng rng(seed);
    TableSchema schema = toy_schema({2, 3});
    ColumnSchema cont;
    cont.name = "x";
    cont.kind = ColumnKind::continuous;
    cont.bucket_edges = {0.0, 1.0, 2.5, 4.0};
    schema.columns.push_back(cont);
    schema.n_records = 60;

    const IndexRows rows = random_rows(schema, 60, rng);
    const EncodedMatrix data = encoded_from(rows, schema);

    ModelFile model;
    model.schema = schema;
    model.weights = compute_weights(data, schema);
    model.real_marginals = marginals_of(data);
    model.config.latent_dim = 4;
    model.config.hidden_dim = 8;
    model.config.seed = seed;
    Rng init(seed);
    model.params = VaeParams::init(schema.total_width(), 8, 4, init);
    model.params.beta = 1.2345;
    return model;
}

std::string serialize(const ModelFile& model) {
    std::ostringstream out(std::ios::binary);
    save_model(out, model);
    return out.str();
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& s, const std::string& needle) {
    std::size_t count = 0;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line))
        if (line.find(needle) != std::string::npos)
            ++count;
    return count;
}

} // namespace

TEST_CASE("model save/load round trip preserves behavior bit for bit") {
    const ModelFile model = tiny_model(77);
    const std::string bytes = serialize(model);

    std::istringstream in(bytes, std::ios::binary);
    const ModelFile loaded = load_model(in);

    CHECK(serialize(loaded) == bytes);
    CHECK(loaded.params.beta == model.params.beta);
    CHECK(loaded.schema.columns.size() == model.schema.columns.size());
    CHECK(loaded.schema.columns[2].bucket_edges == model.schema.columns[2].bucket_edges);
    CHECK(loaded.real_marginals.counts == model.real_marginals.counts);
    CHECK(loaded.config.latent_dim == 4);

    // identical sampling output for a fixed seed
    Rng s1(5), s2(5);
    const PostSelectResult a =
        post_select(model.params, model.schema, model.real_marginals, 40, 2, s1);
    const PostSelectResult b =
        post_select(loaded.params, loaded.schema, loaded.real_marginals, 40, 2, s2);
    CHECK(a.samples.rows() == b.samples.rows());
}

TEST_CASE("model load rejects foreign and damaged input") {
    const std::string bytes = serialize(tiny_model(1));

    std::istringstream not_model("definitely not a model", std::ios::binary);
    CHECK_THROWS_WITH_AS(load_model(not_model), doctest::Contains("not a PSVAE model"), DataError);

    std::string wrong_version = bytes;
    wrong_version[5] = 9; // version word follows the magic
    std::istringstream wv(wrong_version, std::ios::binary);
    CHECK_THROWS_WITH_AS(load_model(wv), doctest::Contains("version"), DataError);

    std::istringstream truncated(bytes.substr(0, bytes.size() / 2), std::ios::binary);
    CHECK_THROWS_AS(load_model(truncated), DataError);
}

TEST_CASE("cli fit/sample/eval round trip") {
    const auto dir = fresh_temp_dir("cli");
    const auto csv = dir / "train.csv";
    write_csv_file(csv.string(), oracle_table(400, 12));

    const auto model_path = dir / "model.psvae";
    const std::string fit_args =
        "fit " + csv.string() + " -o " + model_path.string() + " --epochs 5 --seed 7";
    const CliResult fit1 = run_cli(fit_args);
    REQUIRE(fit1.exit_code == 0);
    CHECK(count_lines(fit1.output, "epoch ") == 5);
    REQUIRE(std::filesystem::exists(model_path));

    // same command, same seed: byte-identical model
    const auto model2_path = dir / "model2.psvae";
    const CliResult fit2 =
        run_cli("fit " + csv.string() + " -o " + model2_path.string() + " --epochs 5 --seed 7");
    REQUIRE(fit2.exit_code == 0);
    CHECK(slurp(model_path) == slurp(model2_path));

    const CliResult sample1 = run_cli("sample " + model_path.string() + " -n 50 --seed 3");
    REQUIRE(sample1.exit_code == 0);
    CHECK(count_lines(sample1.output, "") == 51); // header + 50 rows
    CHECK(sample1.output.substr(0, sample1.output.find('\n')) == "flag_a,flag_b,grade,score");

    const CliResult sample2 = run_cli("sample " + model_path.string() + " -n 50 --seed 3");
    CHECK(sample2.output == sample1.output);

    const CliResult raw = run_cli("sample " + model_path.string() + " -n 20 --cycles 0 --seed 3");
    CHECK(raw.exit_code == 0);

    // categorical values come from the training vocabulary
    {
        std::istringstream body(sample1.output);
        RawTable synth = read_csv(body);
        for (const auto& cell : synth.columns[2].cells)
            CHECK((cell == "g0" || cell == "g1" || cell == "g2" || cell == "g3"));
    }

    const auto syn_csv = dir / "syn.csv";
    const CliResult sampled_to_file =
        run_cli("sample " + model_path.string() + " -n 400 --seed 5 -o " + syn_csv.string());
    REQUIRE(sampled_to_file.exit_code == 0);

    const CliResult eval =
        run_cli("eval " + csv.string() + " " + syn_csv.string() + " --target flag_a --identity");
    REQUIRE(eval.exit_code == 0);
    const auto j = nlohmann::json::parse(eval.output);
    CHECK(j["l1"].is_number());
    CHECK(j["rho"].is_number());
    CHECK(j["f1"].is_number());
    CHECK(j["identity_f1"].is_number());
    CHECK(j["dataset"] == "train");

    // a table against itself scores zero on both distribution metrics
    const CliResult self_eval = run_cli("eval " + csv.string() + " " + csv.string() + " --target flag_a");
    REQUIRE(self_eval.exit_code == 0);
    const auto js = nlohmann::json::parse(self_eval.output);
    CHECK(js["l1"].get<double>() == 0.0);
    CHECK(js["rho"].get<double>() == 0.0);

    std::filesystem::remove_all(dir);
}

TEST_CASE("cli error paths use the documented exit codes") {
    const auto dir = fresh_temp_dir("clierr");
    const auto csv = dir / "train.csv";
    write_csv_file(csv.string(), oracle_table(100, 5));

    CHECK(run_cli("").exit_code == 2);                       // missing subcommand
    CHECK(run_cli("frobnicate").exit_code == 2);             // unknown subcommand
    const auto model_path = dir / "m.psvae";
    CHECK(run_cli("fit " + csv.string() + " -o " + model_path.string() + " --epochs 0").exit_code ==
          2); // usage error

    const CliResult missing_csv = run_cli("fit " + (dir / "nope.csv").string() + " -o " +
                                          model_path.string() + " --epochs 1");
    CHECK(missing_csv.exit_code == 3);
    CHECK(missing_csv.output.find("error:") != std::string::npos);

    // corrupt model file
    const auto bad_model = dir / "bad.psvae";
    std::ofstream(bad_model) << "garbage";
    const CliResult corrupt = run_cli("sample " + bad_model.string() + " -n 5");
    CHECK(corrupt.exit_code == 3);

    // eval with a missing target column names it
    const CliResult bad_target =
        run_cli("eval " + csv.string() + " " + csv.string() + " --target nope");
    CHECK(bad_target.exit_code == 3);
    CHECK(bad_target.output.find("nope") != std::string::npos);

    // header mismatch between the two tables
    RawTable other = oracle_table(50, 6);
    other.columns[0].name = "renamed";
    const auto other_csv = dir / "other.csv";
    write_csv_file(other_csv.string(), other);
    CHECK(run_cli("eval " + csv.string() + " " + other_csv.string() + " --target flag_a").exit_code ==
          3);

    std::filesystem::remove_all(dir);
}

TEST_CASE("cli round trip survives labels that need quoting") {
    const auto dir = fresh_temp_dir("cliquote");
    RawTable table;
    table.columns.resize(2);
    table.columns[0].name = "city, region";
    table.columns[1].name = "note";
    Rng rng(2);
    const std::vector<std::string> cities = {"Basel, CH", "St. \"Gallen\"", "Bern\nWest"};
    for (int i = 0; i < 120; ++i) {
        table.columns[0].cells.push_back(cities[rng.below(3)]);
        table.columns[1].cells.push_back(rng.below(2) ? "ok" : "flagged, twice");
    }
    const auto csv = dir / "quoted.csv";
    write_csv_file(csv.string(), table);

    const auto model_path = dir / "q.psvae";
    REQUIRE(run_cli("fit " + csv.string() + " -o " + model_path.string() + " --epochs 2").exit_code ==
            0);
    const auto out_csv = dir / "syn.csv";
    REQUIRE(run_cli("sample " + model_path.string() + " -n 30 --seed 1 -o " + out_csv.string())
                .exit_code == 0);

    const RawTable synth = read_csv_file(out_csv.string());
    REQUIRE(synth.columns.size() == 2);
    CHECK(synth.columns[0].name == "city, region");
    for (const auto& cell : synth.columns[0].cells)
        CHECK((cell == cities[0] || cell == cities[1] || cell == cities[2]));

    const CliResult eval =
        run_cli("eval " + csv.string() + " " + out_csv.string() + " --target note");
    CHECK(eval.exit_code == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli type overrides change the schema") {
    const auto dir = fresh_temp_dir("clitype");
    const auto csv = dir / "t.csv";
    write_csv_file(csv.string(), oracle_table(200, 9));
    const auto model_path = dir / "t.psvae";

    // score has ~200 distinct values; forcing categorical keeps them all
    const CliResult forced = run_cli("fit " + csv.string() + " -o " + model_path.string() +
                                     " --epochs 1 --type score=categorical");
    REQUIRE(forced.exit_code == 0);
    const ModelFile m = load_model_file(model_path.string());
    CHECK(m.schema.columns[3].kind == ColumnKind::categorical);

    CHECK(run_cli("fit " + csv.string() + " -o " + model_path.string() +
                  " --epochs 1 --type score=nonsense")
              .exit_code == 2);
    std::filesystem::remove_all(dir);
}

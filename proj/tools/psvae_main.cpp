#include "psvae/evaluation.hpp"
#include "psvae/model_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace {

using namespace psvae;

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_data = 3;
constexpr int exit_numeric = 4;

struct FitOptions {
    std::string csv_path;
    std::string output;
    TrainConfig config;
    std::vector<std::string> type_flags;
};

struct SampleOptions {
    std::string model_path;
    std::size_t count = 0;
    std::size_t cycles = 10;
    bool argmax = false;
    std::uint64_t seed = 0;
    std::string output; // empty = stdout
};

struct EvalOptions {
    std::string real_path;
    std::string syn_path;
    std::string target;
    bool identity = false;
    std::uint64_t seed = 0;
};

TypeOverrides parse_type_flags(const std::vector<std::string>& flags) {
    TypeOverrides overrides;
    for (const auto& flag : flags) {
        const auto eq = flag.find('=');
        const std::string kind = eq == std::string::npos ? "" : flag.substr(eq + 1);
        if (kind == "categorical")
            overrides[flag.substr(0, eq)] = ColumnKind::categorical;
        else if (kind == "continuous")
            overrides[flag.substr(0, eq)] = ColumnKind::continuous;
        else
            throw CLI::ValidationError("--type", "expected <column>=categorical|continuous");
    }
    return overrides;
}

int run_fit(const FitOptions& opt) {
    const RawTable table = read_csv_file(opt.csv_path);
    const TableSchema schema = infer_schema(table, 100, parse_type_flags(opt.type_flags));
    const EncodedMatrix encoded = encode(table, schema);
    const CategoryWeights weights = compute_weights(encoded, schema);

    auto print_epoch = [&](const EpochRecord& rec) {
        std::printf("epoch %zu/%zu  L_RE=%.6f  L_KL=%.6f  beta=%.6f  sec=%.3f\n", rec.epoch,
                    opt.config.epochs, rec.re_sum, rec.kl_sum, rec.beta_after, rec.seconds);
        std::fflush(stdout);
    };
    auto [params, log] = fit(encoded, weights, schema, opt.config, print_epoch);
    (void)log;

    ModelFile model;
    model.schema = schema;
    model.weights = weights;
    model.real_marginals = marginals_of(encoded);
    model.params = std::move(params);
    model.config = opt.config;
    save_model_file(opt.output, model);
    return exit_ok;
}

int run_sample(const SampleOptions& opt) {
    const ModelFile model = load_model_file(opt.model_path);

    Rng latent_rng = named_stream(opt.seed, "latent");
    Rng decode_rng = named_stream(opt.seed, "decode");
    const SelectionMode mode = opt.argmax ? SelectionMode::argmax : SelectionMode::categorical;
    const PostSelectResult result = post_select(model.params, model.schema, model.real_marginals,
                                                opt.count, opt.cycles, latent_rng, mode);
    const RawTable table =
        decode_table(result.samples.rows(), model.schema, DecodeMode::uniform, decode_rng);

    if (opt.output.empty())
        write_csv(std::cout, table);
    else
        write_csv_file(opt.output, table);
    return exit_ok;
}

int run_eval(const EvalOptions& opt) {
    const RawTable real = read_csv_file(opt.real_path);
    const RawTable syn = read_csv_file(opt.syn_path);
    if (real.header() != syn.header())
        throw DataError("eval error: header mismatch between '" + opt.real_path + "' and '" +
                        opt.syn_path + "'");

    const TableSchema schema = infer_schema(real);
    ClassifierConfig classifier;
    classifier.target_column = opt.target;

    MetricsReport report;
    report.l1 = l1_metric(real, syn, schema);
    report.rho = pearson_rho_diff(real, syn, schema);
    {
        Rng rng = named_stream(opt.seed, "classifier");
        report.f1 = f1_cross(syn, real, schema, classifier, rng);
    }
    if (opt.identity) {
        Rng rng = named_stream(opt.seed, "identity");
        report.identity_f1 = identity_f1(real, schema, classifier, 0.8, rng);
    }
    report.dataset = std::filesystem::path(opt.real_path).stem().string();
    report.model = std::filesystem::path(opt.syn_path).stem().string();
    report.seed = opt.seed;
    std::cout << report.to_json() << "\n";
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PSVAE synthetic tabular data generator"};
    app.require_subcommand(1);

    FitOptions fit_opt;
    auto* fit_cmd = app.add_subcommand("fit", "Train a generative model on a CSV table");
    fit_cmd->add_option("csv", fit_opt.csv_path, "input CSV (header row required)")->required();
    fit_cmd->add_option("-o,--output", fit_opt.output, "model file to write")->required();
    fit_cmd->add_option("--epochs", fit_opt.config.epochs, "training epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    fit_cmd->add_option("--batch", fit_opt.config.batch_size, "batch size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    fit_cmd->add_option("--lr", fit_opt.config.learning_rate, "Adam learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    fit_cmd->add_option("--seed", fit_opt.config.seed, "random seed")->capture_default_str();
    fit_cmd->add_option("--type", fit_opt.type_flags,
                        "per-column type override, <column>=categorical|continuous");

    SampleOptions sample_opt;
    auto* sample_cmd = app.add_subcommand("sample", "Generate synthetic rows from a model");
    sample_cmd->add_option("model", sample_opt.model_path, "model file from fit")->required();
    sample_cmd->add_option("-n,--rows", sample_opt.count, "rows to generate")
        ->required()
        ->check(CLI::PositiveNumber);
    sample_cmd->add_option("--cycles", sample_opt.cycles, "post-selection cycles (0 = raw output)")
        ->capture_default_str();
    sample_cmd->add_flag("--argmax", sample_opt.argmax, "pick the most likely category per column");
    sample_cmd->add_option("--seed", sample_opt.seed, "random seed")->capture_default_str();
    sample_cmd->add_option("-o,--output", sample_opt.output, "output CSV (default stdout)");

    EvalOptions eval_opt;
    auto* eval_cmd = app.add_subcommand("eval", "Score a synthetic table against the real one");
    eval_cmd->add_option("real", eval_opt.real_path, "real CSV")->required();
    eval_cmd->add_option("synthetic", eval_opt.syn_path, "synthetic CSV")->required();
    eval_cmd->add_option("--target", eval_opt.target, "classification target column")->required();
    eval_cmd->add_flag("--identity", eval_opt.identity, "also compute the identity F1 baseline");
    eval_cmd->add_option("--seed", eval_opt.seed, "random seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (fit_cmd->parsed())
            return run_fit(fit_opt);
        if (sample_cmd->parsed())
            return run_sample(sample_opt);
        return run_eval(eval_opt);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_data;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_data;
    }
}

// Command-line front end for the NT clustering library.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "ntclust/assignment.hpp"
#include "ntclust/data_io.hpp"
#include "ntclust/learning.hpp"
#include "ntclust/measures.hpp"
#include "ntclust/metrics.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

nt::MatrixFormat sniff_format(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw nt::data_error("cannot open " + path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    if (in.gcount() == 4 && magic[0] == 'N' && magic[1] == 'T' && magic[2] == 'B' && magic[3] == '1')
        return nt::MatrixFormat::binary;
    return nt::MatrixFormat::csv;
}

int cmd_synth(int clusters, int dim, int per_cluster, double spread, std::uint64_t seed,
              const std::string& out, const std::string& labels_path) {
    auto [data, labels] = nt::synth_clusters(clusters, dim, per_cluster, spread, seed);
    nt::save_matrix(data, out, nt::MatrixFormat::binary);
    nt::save_labels(labels, labels_path);
    std::cerr << "wrote " << data.cols() << " samples of dimension " << data.rows() << "\n";
    return 0;
}

int cmd_train(const std::string& data_path, const std::string& config_path, const std::string& out_model,
              std::uint64_t seed, bool seed_given, int runs, bool identity) {
    nt::HyperParams hyper;
    if (!config_path.empty()) hyper = nt::load_config(config_path);
    if (seed_given) hyper.seed = seed;
    const nt::Mat x = nt::load_matrix(data_path, sniff_format(data_path));

    const std::uint64_t base_seed = hyper.seed;
    nt::FitResult best;
    double best_objective = std::numeric_limits<double>::infinity();
    int best_run = -1;
    for (int r = 0; r < runs; ++r) {
        hyper.seed = base_seed + static_cast<std::uint64_t>(r);
        nt::FitResult result = nt::fit(x, hyper, nullptr, identity);
        const double final_objective =
            result.report.objectives.empty() ? std::numeric_limits<double>::infinity()
                                             : result.report.objectives.back().total;
        std::printf("run %d seed %llu final_objective %.10g termination %s\n", r + 1,
                    static_cast<unsigned long long>(hyper.seed), final_objective,
                    result.report.termination.c_str());
        if (final_objective < best_objective) {
            best_objective = final_objective;
            best = std::move(result);
            best_run = r;
        }
    }

    std::printf("best run %d\n", best_run + 1);
    std::printf("%-6s %-18s %-10s %-10s\n", "iter", "objective", "changes", "seconds");
    const nt::FitReport& report = best.report;
    for (std::size_t i = 0; i < report.objectives.size(); ++i)
        std::printf("%-6zu %-18.10g %-10d %-10.3f\n", i + 1, report.objectives[i].total,
                    report.assignment_changes[i], report.seconds[i]);

    hyper.seed = base_seed + static_cast<std::uint64_t>(best_run);
    nt::save_model(best.model, hyper, out_model);
    std::cerr << "model written to " << out_model << "\n";
    return 0;
}

int cmd_assign(const std::string& model_path, const std::string& data_path, const std::string& out_labels,
               const std::string& out_repr, bool collapse_similarity) {
    nt::HyperParams hyper;
    const nt::TransformModel model = nt::load_model(model_path, &hyper);
    const nt::Mat x = nt::load_matrix(data_path, sniff_format(data_path));
    if (x.rows() != model.A.cols())
        throw nt::dimension_error("data dimension " + std::to_string(x.rows()) +
                                  " does not match model input dimension " + std::to_string(model.A.cols()));
    const nt::Mat q = model.identity_mode ? x : nt::Mat(model.A * x);
    const std::vector<nt::Assignment> assignments = nt::assign_batch(q, model.params, hyper);

    nt::Partition labels;
    labels.labels.reserve(assignments.size());
    for (const nt::Assignment& a : assignments)
        labels.labels.push_back(collapse_similarity ? a.j1 : a.flat_index);
    nt::save_labels(labels, out_labels);
    if (!out_repr.empty()) {
        nt::Mat y(q.rows(), q.cols());
        for (Eigen::Index i = 0; i < q.cols(); ++i) y.col(i) = assignments[i].y;
        nt::save_matrix(y, out_repr, nt::MatrixFormat::binary);
    }
    std::cerr << "assigned " << assignments.size() << " samples\n";
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path) {
    const nt::Partition pred = nt::load_labels(pred_path);
    const nt::Partition truth = nt::load_labels(truth_path);
    std::printf("CA=%.4f NMI=%.4f\n", nt::cluster_accuracy(pred, truth), nt::nmi(pred, truth));
    return 0;
}

int cmd_knn(const std::string& train_repr_path, const std::string& train_labels_path,
            const std::string& test_repr_path, const std::string& test_labels_path, int k) {
    const nt::Mat train_repr = nt::load_matrix(train_repr_path, sniff_format(train_repr_path));
    const nt::Partition train_labels = nt::load_labels(train_labels_path);
    const nt::Mat test_repr = nt::load_matrix(test_repr_path, sniff_format(test_repr_path));
    const nt::Partition test_labels = nt::load_labels(test_labels_path);
    const nt::Partition pred = nt::knn_classify(train_repr, train_labels, test_repr, k);
    if (pred.labels.size() != test_labels.labels.size())
        throw nt::dimension_error("test labels and representations disagree");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.labels.size(); ++i)
        if (pred.labels[i] == test_labels.labels[i]) ++hits;
    std::printf("accuracy=%.4f\n", static_cast<double>(hits) / static_cast<double>(pred.labels.size()));
    return 0;
}

int cmd_inspect(const std::string& model_path) {
    nt::HyperParams hyper;
    const nt::TransformModel model = nt::load_model(model_path, &hyper);
    const nt::MapDiagnostics d = nt::map_diagnostics(model.A);
    std::printf("M=%lld N=%lld C_d=%d C_s=%d kappa=%.6g mu=%.6g\n",
                static_cast<long long>(model.A.rows()), static_cast<long long>(model.A.cols()),
                model.params.num_taus(), model.params.num_nus(), d.kappa, d.mu);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clustering with jointly learned nonlinear transforms"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate separated Gaussian clusters");
    int clusters = 4, dim = 10, per_cluster = 50;
    double spread = 1.0;
    std::uint64_t synth_seed = 0;
    std::string synth_out, synth_labels;
    synth->add_option("--clusters", clusters, "Number of clusters")->check(CLI::PositiveNumber);
    synth->add_option("--dim", dim, "Sample dimension")->check(CLI::PositiveNumber);
    synth->add_option("--per-cluster", per_cluster, "Samples per cluster")->check(CLI::PositiveNumber);
    synth->add_option("--spread", spread, "Within-cluster standard deviation");
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--out", synth_out, "Output data file (NTB1)")->required();
    synth->add_option("--labels", synth_labels, "Output labels file")->required();

    // train
    auto* train = app.add_subcommand("train", "Train a transform model");
    std::string train_data, train_config, train_out_model;
    std::uint64_t train_seed = 0;
    int runs = 1;
    bool identity = false;
    train->add_option("--data", train_data, "Training data (NTB1 or CSV)")->required();
    train->add_option("--config", train_config, "Hyperparameter JSON file");
    train->add_option("--out-model", train_out_model, "Output model file")->required();
    auto* seed_opt = train->add_option("--seed", train_seed, "Base seed (overrides config)");
    train->add_option("--runs", runs, "Restarts with consecutive seeds; best final objective kept")
        ->check(CLI::PositiveNumber);
    train->add_flag("--identity", identity, "Keep the linear map pinned to the identity");

    // assign
    auto* assign = app.add_subcommand("assign", "Assign samples with a trained model");
    std::string assign_model, assign_data, assign_out_labels, assign_out_repr;
    bool collapse_similarity = false;
    assign->add_option("--model", assign_model, "Model file")->required();
    assign->add_option("--data", assign_data, "Data file (NTB1 or CSV)")->required();
    assign->add_option("--out-labels", assign_out_labels, "Output labels file")->required();
    assign->add_option("--out-repr", assign_out_repr, "Optional NT representations output (NTB1)");
    assign->add_flag("--collapse-similarity", collapse_similarity,
                     "Report the dissimilarity index j1 instead of the flat candidate index");

    // eval
    auto* eval = app.add_subcommand("eval", "Cluster accuracy and NMI of a labeling");
    std::string pred_path, truth_path;
    eval->add_option("--pred", pred_path, "Predicted labels")->required();
    eval->add_option("--truth", truth_path, "Ground-truth labels")->required();

    // knn
    auto* knn = app.add_subcommand("knn", "k-NN classification over representations");
    std::string knn_train_repr, knn_train_labels, knn_test_repr, knn_test_labels;
    int k = 1;
    knn->add_option("--train-repr", knn_train_repr, "Training representations")->required();
    knn->add_option("--train-labels", knn_train_labels, "Training labels")->required();
    knn->add_option("--test-repr", knn_test_repr, "Test representations")->required();
    knn->add_option("--test-labels", knn_test_labels, "Test labels")->required();
    knn->add_option("--k", k, "Neighborhood size")->required();

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Model summary and map diagnostics");
    std::string inspect_model;
    inspect->add_option("--model", inspect_model, "Model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (synth->parsed())
            return cmd_synth(clusters, dim, per_cluster, spread, synth_seed, synth_out, synth_labels);
        if (train->parsed())
            return cmd_train(train_data, train_config, train_out_model, train_seed, seed_opt->count() > 0,
                             runs, identity);
        if (assign->parsed())
            return cmd_assign(assign_model, assign_data, assign_out_labels, assign_out_repr,
                              collapse_similarity);
        if (eval->parsed()) return cmd_eval(pred_path, truth_path);
        if (knn->parsed())
            return cmd_knn(knn_train_repr, knn_train_labels, knn_test_repr, knn_test_labels, k);
        if (inspect->parsed()) return cmd_inspect(inspect_model);
    } catch (const nt::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nt::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

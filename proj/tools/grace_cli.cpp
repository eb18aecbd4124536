// Command-line driver: generate, train, evaluate, propagate-diag, project.

#include <CLI11.hpp>

#include "grace/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Attributed graph clustering with propagated deep embeddings"};
    app.require_subcommand(1);

    grace::cli::GlobalOptions global;
    std::uint64_t seed = 0;
    auto add_globals = [&](CLI::App* sub) {
        sub->add_option("--config", global.config, "key = value configuration file");
        sub->add_option("--seed", seed, "override the configured seed");
        sub->add_option("--out", global.out, "output directory")->capture_default_str();
    };

    auto* generate = app.add_subcommand("generate", "write a seeded attributed stochastic block model dataset");
    add_globals(generate);

    auto* train = app.add_subcommand("train", "pre-train, then co-train embedding and clustering");
    add_globals(train);

    grace::cli::EvaluateOptions eval;
    auto* evaluate = app.add_subcommand("evaluate", "F1 and Jaccard scores of predictions against labels");
    add_globals(evaluate);
    evaluate->add_option("--predictions", eval.predictions, "node<TAB>cluster predictions, one or more")->required();
    evaluate->add_option("--labels", eval.labels, "node<TAB>cluster ground truth, paired with --predictions")
        ->required();

    auto* diag = app.add_subcommand("propagate-diag", "truncated-series gap to the stationary operator");
    add_globals(diag);

    grace::cli::ProjectOptions proj;
    auto* project = app.add_subcommand("project", "2-D PCA of raw contents and propagated embedding");
    add_globals(project);
    project->add_option("--checkpoint", proj.checkpoint, "checkpoint written by train")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : grace::cli::kInputError;
    }

    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--seed") > 0) global.seed = seed;
    }
    if (generate->parsed()) return grace::cli::cmd_generate(global);
    if (train->parsed()) return grace::cli::cmd_train(global);
    if (evaluate->parsed()) return grace::cli::cmd_evaluate(global, eval);
    if (diag->parsed()) return grace::cli::cmd_propagate_diag(global);
    if (project->parsed()) return grace::cli::cmd_project(global, proj);
    return grace::cli::kInputError;
}

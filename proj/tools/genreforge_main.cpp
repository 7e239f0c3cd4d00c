#include <cstdint>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "genreforge/network.hpp"
#include "genreforge/pipeline.hpp"
#include "genreforge/trainer.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Music genre classification on grayscale spectrograms"};
    app.require_subcommand(1);

    std::string pre_manifest;
    std::string pre_out;
    bool pre_augment = false;
    std::uint64_t pre_split_seed = 0;
    CLI::App* pre = app.add_subcommand(
        "preprocess", "Decode audio, cache spectrograms, write the slice index");
    pre->add_option("--manifest", pre_manifest, "CSV manifest with header path,label,split")
        ->required();
    pre->add_option("--out", pre_out, "Output directory for caches and index.json")
        ->required();
    pre->add_flag("--augment", pre_augment,
                  "Add overlap and pitch-shift slices for the train split");
    CLI::Option* pre_split_opt = pre->add_option(
        "--auto-split", pre_split_seed,
        "Ignore manifest splits; assign stratified 80/10/10 with this seed");

    std::string tr_index;
    std::string tr_out;
    int tr_classes = 0;
    int tr_kernel = 4;
    std::string tr_block = "basic";
    std::vector<int> tr_replace;
    int tr_epochs = 0;
    std::uint64_t tr_seed = 0;
    int tr_batch = 128;
    double tr_lr = 1e-2;
    double tr_decay = 1e-6;
    double tr_l2 = 1e-4;
    int tr_growth = 32;
    double tr_dropout = 0.5;
    double tr_svm_c = 1.0;
    int tr_svm_epochs = 200;
    CLI::App* tr = app.add_subcommand("train", "Train the CNN and stacking SVM");
    tr->add_option("--index", tr_index, "index.json from preprocess")->required();
    tr->add_option("--classes", tr_classes, "Number of genre classes")->required();
    tr->add_option("--kernel", tr_kernel, "Convolution kernel size, 3 or 4");
    tr->add_option("--block", tr_block, "Block variant: basic, resnet, densenet");
    tr->add_option("--replace", tr_replace, "Stage positions (0-4) built from the variant")
        ->delimiter(',');
    tr->add_option("--epochs", tr_epochs, "Training epochs")->required();
    tr->add_option("--seed", tr_seed, "RNG seed for init and shuffling");
    tr->add_option("--out", tr_out, "Checkpoint output path")->required();
    tr->add_option("--batch", tr_batch, "Mini-batch size");
    tr->add_option("--lr", tr_lr, "Initial learning rate");
    tr->add_option("--decay", tr_decay, "Inverse-time learning-rate decay");
    tr->add_option("--l2", tr_l2, "L2 coefficient on conv and dense weights");
    tr->add_option("--growth", tr_growth, "DenseNet growth rate");
    tr->add_option("--dropout", tr_dropout, "Dropout rate before the logits layer");
    tr->add_option("--svm-c", tr_svm_c, "Stacking SVM regularization C");
    tr->add_option("--svm-epochs", tr_svm_epochs, "Stacking SVM training epochs");

    std::string ev_ckpt;
    std::string ev_index;
    std::string ev_split = "test";
    std::string ev_method = "vote";
    CLI::App* ev = app.add_subcommand("evaluate", "Score a checkpoint on an index split");
    ev->add_option("--ckpt", ev_ckpt, "Checkpoint path")->required();
    ev->add_option("--index", ev_index, "index.json from preprocess")->required();
    ev->add_option("--split", ev_split, "Split to score: train, val, test");
    ev->add_option("--method", ev_method, "Track ensemble: vote or svm");

    std::string pd_ckpt;
    std::string pd_audio;
    CLI::App* pd = app.add_subcommand("predict", "Classify a single audio file");
    pd->add_option("--ckpt", pd_ckpt, "Checkpoint path")->required();
    pd->add_option("--audio", pd_audio, "WAV file to classify")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (pre->parsed()) {
            genreforge::PreprocessOptions opts;
            opts.augment = pre_augment;
            if (pre_split_opt->count() > 0) opts.auto_split_seed = pre_split_seed;
            const genreforge::PreprocessSummary summary =
                genreforge::preprocess_command(pre_manifest, pre_out, opts, &std::cerr);
            std::cout << "processed=" << summary.processed
                      << " skipped=" << summary.skipped << " slices=" << summary.slices
                      << "\n";
        } else if (tr->parsed()) {
            genreforge::NetworkConfig net_cfg;
            net_cfg.num_classes = tr_classes;
            net_cfg.kernel_size = tr_kernel;
            net_cfg.block_variant = genreforge::block_variant_from_name(tr_block);
            net_cfg.replace_positions = tr_replace;
            net_cfg.growth_rate = tr_growth;
            net_cfg.dropout_rate = tr_dropout;
            genreforge::TrainConfig train_cfg;
            train_cfg.lr0 = tr_lr;
            train_cfg.decay = tr_decay;
            train_cfg.batch_size = tr_batch;
            train_cfg.l2_lambda = tr_l2;
            train_cfg.epochs = tr_epochs;
            train_cfg.seed = tr_seed;
            genreforge::StackingConfig stacking;
            stacking.C = tr_svm_c;
            stacking.epochs = tr_svm_epochs;
            const genreforge::TrainReport report = genreforge::train_command(
                tr_index, net_cfg, train_cfg, stacking, tr_out, &std::cout);
            std::cout << "steps=" << report.steps << "\n";
            if (report.best_epoch >= 0) {
                std::cout << std::fixed << std::setprecision(4)
                          << "best_epoch=" << report.best_epoch
                          << " best_val_acc=" << report.best_val_accuracy << "\n";
            }
            std::cout << "checkpoint=" << tr_out << "\n";
        } else if (ev->parsed()) {
            const genreforge::EvalReport report = genreforge::evaluate_command(
                ev_ckpt, ev_index, genreforge::split_from_name(ev_split),
                genreforge::ensemble_method_from_name(ev_method));
            std::cout << report.text();
        } else if (pd->parsed()) {
            std::cout << genreforge::predict_command(pd_ckpt, pd_audio).text();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

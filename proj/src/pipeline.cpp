#include "genreforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "binio.hpp"
#include "genreforge/audio.hpp"
#include "genreforge/augment.hpp"
#include "genreforge/cache.hpp"
#include "genreforge/checkpoint.hpp"
#include "genreforge/errors.hpp"

namespace genreforge {

namespace {

using nlohmann::json;

int label_index(const std::vector<std::string>& labels, const std::string& label) {
    const auto it = std::find(labels.begin(), labels.end(), label);
    return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

bool from_pitch_shift(Provenance p) {
    return p == Provenance::kPitchShift || p == Provenance::kPitchShiftOverlap;
}

int argmax_row(const Tensor& t, std::size_t row, int cols) {
    int best = 0;
    for (int c = 1; c < cols; ++c) {
        if (t.data[row * cols + c] > t.data[row * cols + best]) best = c;
    }
    return best;
}

std::vector<double> tensor_row(const Tensor& t, std::size_t row, int cols) {
    std::vector<double> out(cols);
    for (int c = 0; c < cols; ++c) out[c] = t.data[row * cols + c];
    return out;
}

Tensor batch_all(const std::vector<Slice>& slices) {
    std::vector<std::size_t> order(slices.size());
    std::iota(order.begin(), order.end(), 0);
    return batch_from_slices(slices, order, 0, order.size());
}

int preprocess_threads(std::size_t tracks) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    unsigned cap = hw;
    if (const char* env = std::getenv("GENREFORGE_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) cap = static_cast<unsigned>(v);
    }
    const std::size_t n = std::max<std::size_t>(tracks, 1);
    return static_cast<int>(std::min<std::size_t>(cap, n));
}

}  // namespace

void save_slice_index(const std::filesystem::path& path, const SliceIndex& index) {
    json j;
    j["sample_rate"] = index.sample_rate;
    j["augmented"] = index.augmented;
    j["labels"] = index.labels;
    json tracks = json::array();
    for (const TrackRef& t : index.tracks) {
        tracks.push_back({{"source", t.source},
                          {"cache", t.cache},
                          {"label", t.label},
                          {"split", split_name(t.split)}});
    }
    j["tracks"] = std::move(tracks);
    json slices = json::array();
    for (const SliceRef& s : index.slices) {
        slices.push_back({{"track", s.track},
                          {"offset", s.offset_frames},
                          {"provenance", provenance_name(s.provenance)}});
    }
    j["slices"] = std::move(slices);
    binio::write_file_atomic(path, j.dump(1) + "\n");
}

SliceIndex load_slice_index(const std::filesystem::path& path) {
    const std::string text = binio::read_file(path);
    SliceIndex index;
    try {
        const json j = json::parse(text);
        index.sample_rate = j.at("sample_rate").get<int>();
        index.augmented = j.at("augmented").get<bool>();
        index.labels = j.at("labels").get<std::vector<std::string>>();
        for (const json& t : j.at("tracks")) {
            TrackRef ref;
            ref.source = t.at("source").get<std::string>();
            ref.cache = t.at("cache").get<std::string>();
            ref.label = t.at("label").get<std::string>();
            ref.split = split_from_name(t.at("split").get<std::string>());
            if (label_index(index.labels, ref.label) < 0) {
                throw ParseError("track '" + ref.source + "' has label '" + ref.label +
                                 "' missing from the labels array");
            }
            index.tracks.push_back(std::move(ref));
        }
        for (const json& s : j.at("slices")) {
            SliceRef ref;
            ref.track = s.at("track").get<int>();
            ref.offset_frames = s.at("offset").get<int>();
            ref.provenance = provenance_from_name(s.at("provenance").get<std::string>());
            if (ref.track < 0 || ref.track >= static_cast<int>(index.tracks.size())) {
                throw ParseError("slice references track " + std::to_string(ref.track) +
                                 " out of range");
            }
            if (ref.offset_frames < 0) throw ParseError("negative slice offset");
            index.slices.push_back(ref);
        }
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError("index " + path.string() + ": " + e.what());
    }
    return index;
}

PreprocessSummary preprocess_command(const std::filesystem::path& manifest_path,
                                     const std::filesystem::path& out_dir,
                                     const PreprocessOptions& opts, std::ostream* log) {
    if (opts.max_slices_per_track < 1) {
        throw std::invalid_argument("preprocess: max_slices_per_track must be >= 1");
    }
    std::vector<ManifestEntry> entries = load_manifest(manifest_path);
    if (opts.auto_split_seed) auto_split(entries, *opts.auto_split_seed);
    std::filesystem::create_directories(out_dir);

    struct Result {
        bool ok = false;
        std::string error;
        int frames = 0;
    };
    std::vector<Result> results(entries.size());
    std::atomic<std::size_t> next{0};

    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= entries.size()) return;
            Result& res = results[i];
            try {
                const AudioClip clip = load_wav_mono(entries[i].path);
                const Spectrogram spec = make_spectrogram(clip, entries[i].path);
                if (spec.frames < kSliceFrames) {
                    res.error = "only " + std::to_string(spec.frames) +
                                " frames, need " + std::to_string(kSliceFrames) +
                                " for one slice";
                    continue;
                }
                const std::filesystem::path cache =
                    out_dir / ("track" + std::to_string(i) + ".spec");
                write_spectrogram_cache(cache, spec);
                res.frames = spec.frames;
                res.ok = true;
            } catch (const std::exception& e) {
                res.error = e.what();
            }
        }
    };

    const int n_threads = preprocess_threads(entries.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    SliceIndex index;
    index.augmented = opts.augment;
    PreprocessSummary summary;
    std::set<std::string> labels_present;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const Result& res = results[i];
        if (!res.ok) {
            ++summary.skipped;
            if (log) *log << "skip " << entries[i].path << ": " << res.error << "\n";
            continue;
        }
        const int track = static_cast<int>(index.tracks.size());
        index.tracks.push_back({entries[i].path, "track" + std::to_string(i) + ".spec",
                                entries[i].label, entries[i].split});
        labels_present.insert(entries[i].label);
        const int base = std::min(opts.max_slices_per_track, res.frames / kSliceFrames);
        if (opts.augment && entries[i].split == Split::kTrain) {
            for (const auto& [offset, prov] : augmented_offsets(base)) {
                index.slices.push_back({track, offset, prov});
            }
        } else {
            for (int k = 0; k < base; ++k) {
                index.slices.push_back({track, k * kSliceFrames, Provenance::kOriginal});
            }
        }
        ++summary.processed;
    }
    index.labels.assign(labels_present.begin(), labels_present.end());
    summary.slices = static_cast<int>(index.slices.size());
    save_slice_index(out_dir / "index.json", index);
    return summary;
}

TrainReport train_command(const std::filesystem::path& index_path,
                          const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                          const StackingConfig& stacking,
                          const std::filesystem::path& checkpoint_path,
                          std::ostream* progress) {
    net_cfg.validate();
    train_cfg.validate();
    if (stacking.C <= 0.0 || stacking.epochs <= 0) {
        throw ConfigError("train: stacking C and epochs must be positive");
    }
    const SliceIndex index = load_slice_index(index_path);
    if (static_cast<int>(index.labels.size()) != net_cfg.num_classes) {
        throw ConfigError("train: index has " + std::to_string(index.labels.size()) +
                          " labels but num_classes is " +
                          std::to_string(net_cfg.num_classes));
    }
    const std::filesystem::path dir = index_path.parent_path();

    std::string missing;
    for (const TrackRef& t : index.tracks) {
        if (!std::filesystem::exists(dir / t.cache)) {
            if (!missing.empty()) missing += ", ";
            missing += t.cache;
        }
    }
    if (!missing.empty()) {
        throw std::runtime_error("train: missing cache entries: " + missing);
    }

    std::vector<std::vector<const SliceRef*>> per_track(index.tracks.size());
    for (const SliceRef& s : index.slices) per_track[s.track].push_back(&s);

    struct StackTrack {
        std::string id;
        int label = 0;
        std::vector<Slice> originals;
    };
    std::vector<Slice> train_slices, val_slices;
    std::vector<int> train_labels, val_labels;
    std::vector<StackTrack> stack_tracks;

    for (std::size_t ti = 0; ti < index.tracks.size(); ++ti) {
        const TrackRef& t = index.tracks[ti];
        if (t.split == Split::kTest || per_track[ti].empty()) continue;
        Spectrogram spec = read_spectrogram_cache(dir / t.cache);
        spec.source_id = t.source;
        const bool needs_shift =
            std::any_of(per_track[ti].begin(), per_track[ti].end(),
                        [](const SliceRef* s) { return from_pitch_shift(s->provenance); });
        Spectrogram shifted;
        if (needs_shift) shifted = pitch_shift(spec, kAugmentSemitones);
        const int cls = label_index(index.labels, t.label);
        StackTrack st{t.source, cls, {}};
        for (const SliceRef* s : per_track[ti]) {
            Slice slice = extract_slice(from_pitch_shift(s->provenance) ? shifted : spec,
                                        s->offset_frames, s->provenance);
            if (t.split == Split::kTrain) {
                if (s->provenance == Provenance::kOriginal) st.originals.push_back(slice);
                train_slices.push_back(std::move(slice));
                train_labels.push_back(cls);
            } else {
                val_slices.push_back(std::move(slice));
                val_labels.push_back(cls);
            }
        }
        if (t.split == Split::kTrain && !st.originals.empty()) {
            stack_tracks.push_back(std::move(st));
        }
    }
    if (train_slices.empty()) {
        throw std::runtime_error("train: index has no training slices");
    }

    std::mt19937_64 rng(train_cfg.seed);
    Network net(net_cfg, rng);
    NetSnapshot best;
    TrainReport report = train(net, train_slices, train_labels, val_slices, val_labels,
                               train_cfg, progress, &best);
    restore(net, best);
    quantize_params(net);

    std::optional<SvmModel> svm;
    {
        std::vector<TrackFeatures> feats;
        std::set<int> classes_present;
        for (const StackTrack& st : stack_tracks) {
            const Tensor batch = batch_all(st.originals);
            net.forward(batch, false);
            const Tensor& features = net.features();
            std::vector<std::vector<double>> rows;
            rows.reserve(st.originals.size());
            for (std::size_t i = 0; i < st.originals.size(); ++i) {
                rows.push_back(tensor_row(features, i, kFeatureDim));
            }
            feats.push_back({st.id, average_features(rows), st.label});
            classes_present.insert(st.label);
        }
        if (classes_present.size() >= 2) {
            svm = svm_train(feats, stacking.C, stacking.epochs, train_cfg.seed);
        } else if (progress) {
            *progress << "stacking skipped: fewer than two classes in the train split\n";
        }
    }
    save_checkpoint(checkpoint_path, net, svm ? &*svm : nullptr, index.labels);
    return report;
}

EnsembleMethod ensemble_method_from_name(const std::string& name) {
    if (name == "vote") return EnsembleMethod::kVote;
    if (name == "svm") return EnsembleMethod::kSvm;
    throw std::invalid_argument("unknown ensemble method '" + name +
                                "' (expected vote or svm)");
}

std::string EvalReport::text() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "segment_accuracy=" << segment_accuracy << "\n";
    os << "track_accuracy=" << track_accuracy << "\n";
    os << "confusion (rows true, columns predicted):\n";
    std::size_t width = 1;
    for (const std::string& l : labels) width = std::max(width, l.size());
    os << std::string(width + 1, ' ');
    for (const std::string& l : labels) os << " " << std::setw(static_cast<int>(width)) << l;
    os << "\n";
    for (std::size_t r = 0; r < labels.size(); ++r) {
        os << std::setw(static_cast<int>(width) + 1) << labels[r];
        for (std::size_t c = 0; c < labels.size(); ++c) {
            os << " " << std::setw(static_cast<int>(width)) << confusion[r][c];
        }
        os << "\n";
    }
    return os.str();
}

EvalReport evaluate_command(const std::filesystem::path& checkpoint_path,
                            const std::filesystem::path& index_path, Split split,
                            EnsembleMethod method) {
    LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);
    Network& net = *ckpt.network;
    const int num_classes = net.config().num_classes;
    const SliceIndex index = load_slice_index(index_path);
    if (static_cast<int>(index.labels.size()) != num_classes) {
        throw ConfigError("evaluate: checkpoint expects " + std::to_string(num_classes) +
                          " classes but the index has " +
                          std::to_string(index.labels.size()) + " labels");
    }
    if (!ckpt.labels.empty() && ckpt.labels != index.labels) {
        throw ConfigError("evaluate: checkpoint label names do not match the index");
    }
    if (method == EnsembleMethod::kSvm && !ckpt.svm) {
        throw std::runtime_error(
            "evaluate: checkpoint has no SVM section; use --method vote");
    }
    const std::filesystem::path dir = index_path.parent_path();

    std::vector<std::vector<const SliceRef*>> per_track(index.tracks.size());
    for (const SliceRef& s : index.slices) {
        if (s.provenance == Provenance::kOriginal) per_track[s.track].push_back(&s);
    }

    EvalReport report;
    report.labels = index.labels;
    report.confusion.assign(num_classes, std::vector<int>(num_classes, 0));
    std::vector<TrackPrediction> track_preds;
    long correct_segments = 0;
    long total_segments = 0;

    for (std::size_t ti = 0; ti < index.tracks.size(); ++ti) {
        const TrackRef& t = index.tracks[ti];
        if (t.split != split || per_track[ti].empty()) continue;
        Spectrogram spec = read_spectrogram_cache(dir / t.cache);
        spec.source_id = t.source;
        std::vector<Slice> slices;
        slices.reserve(per_track[ti].size());
        for (const SliceRef* s : per_track[ti]) {
            slices.push_back(extract_slice(spec, s->offset_frames, s->provenance));
        }
        const int truth = label_index(index.labels, t.label);
        const Tensor batch = batch_all(slices);
        auto [logits, features] = network_forward(net, batch, false);
        const Tensor probs = softmax_rows(logits);

        std::vector<std::pair<int, std::vector<double>>> seg_preds;
        std::vector<std::vector<double>> feat_rows;
        for (std::size_t i = 0; i < slices.size(); ++i) {
            const int arg = argmax_row(logits, i, num_classes);
            if (arg == truth) ++correct_segments;
            ++total_segments;
            seg_preds.emplace_back(arg, tensor_row(probs, i, num_classes));
            if (method == EnsembleMethod::kSvm) {
                feat_rows.push_back(tensor_row(features, i, kFeatureDim));
            }
        }
        const int predicted = method == EnsembleMethod::kVote
                                  ? vote_track(seg_preds)
                                  : svm_predict(*ckpt.svm, average_features(feat_rows));
        report.confusion[truth][predicted] += 1;
        track_preds.push_back({t.source, predicted, truth});
    }
    if (track_preds.empty()) {
        throw std::runtime_error(std::string("evaluate: split '") + split_name(split) +
                                 "' has no tracks with slices");
    }
    report.segment_accuracy =
        static_cast<double>(correct_segments) / static_cast<double>(total_segments);
    report.track_accuracy = track_accuracy(track_preds);
    return report;
}

std::string PredictResult::text() const {
    std::ostringstream os;
    os << "genre=" << label << "\n";
    os << "slices=" << slices_used << "\n";
    os << std::fixed << std::setprecision(4);
    for (std::size_t c = 0; c < scores.size(); ++c) {
        os << "score[" << labels[c] << "]=" << scores[c] << "\n";
    }
    return os.str();
}

PredictResult predict_command(const std::filesystem::path& checkpoint_path,
                              const std::filesystem::path& audio_path) {
    LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);
    Network& net = *ckpt.network;
    const int num_classes = net.config().num_classes;

    const AudioClip clip = load_wav_mono(audio_path.string());
    constexpr long kMinSamples =
        kStftWindow + static_cast<long>(kSliceFrames - 1) * kStftHop;
    if (static_cast<long>(clip.samples.size()) < kMinSamples) {
        std::ostringstream msg;
        msg << std::fixed << std::setprecision(2);
        msg << "audio too short: " << clip.samples.size() / double(kCanonicalRate)
            << " s after resampling, need at least "
            << kMinSamples / double(kCanonicalRate) << " s (" << kMinSamples
            << " samples at " << kCanonicalRate << " Hz)";
        throw std::invalid_argument(msg.str());
    }
    const Spectrogram spec = make_spectrogram(clip, audio_path.string());
    const int count = std::min(10, max_slice_count(spec));
    const std::vector<Slice> slices = slice_track(spec, count);

    const Tensor batch = batch_all(slices);
    const Tensor logits = net.forward(batch, false);
    const Tensor probs = softmax_rows(logits);

    PredictResult res;
    res.slices_used = count;
    res.scores.assign(num_classes, 0.0);
    for (int i = 0; i < count; ++i) {
        for (int c = 0; c < num_classes; ++c) {
            res.scores[c] += probs.data[std::size_t(i) * num_classes + c];
        }
    }
    for (double& s : res.scores) s /= count;
    res.class_index = 0;
    for (int c = 1; c < num_classes; ++c) {
        if (res.scores[c] > res.scores[res.class_index]) res.class_index = c;
    }
    if (ckpt.labels.empty()) {
        for (int c = 0; c < num_classes; ++c) {
            res.labels.push_back("class" + std::to_string(c));
        }
    } else {
        res.labels = ckpt.labels;
    }
    res.label = res.labels[res.class_index];
    return res;
}

}  // namespace genreforge

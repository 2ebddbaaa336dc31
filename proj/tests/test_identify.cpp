#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "xrid/identify.hpp"
#include "xrid/metrics.hpp"
#include "xrid/rng.hpp"

using namespace xrid;
using Catch::Approx;

namespace {

// Independent oracle: count argmax votes, then argmax by count with the
// declared tie-break (cumulative probability, then lowest index).
int oracle_winner(const std::vector<std::vector<double>>& streams) {
    const std::size_t classes = streams.front().size();
    std::vector<int> counts(classes, 0);
    std::vector<double> cumulative(classes, 0.0);
    for (const auto& probs : streams) {
        int arg = 0;
        for (std::size_t c = 0; c < classes; ++c) {
            if (probs[c] > probs[static_cast<std::size_t>(arg)]) arg = static_cast<int>(c);
            cumulative[c] += probs[c];
        }
        counts[static_cast<std::size_t>(arg)]++;
    }
    int best = 0;
    for (std::size_t c = 1; c < classes; ++c) {
        const auto ci = static_cast<int>(c);
        if (counts[c] > counts[static_cast<std::size_t>(best)]) best = ci;
        else if (counts[c] == counts[static_cast<std::size_t>(best)] &&
                 cumulative[c] > cumulative[static_cast<std::size_t>(best)])
            best = ci;
    }
    return best;
}

std::vector<std::vector<double>> random_stream(Rng& rng, int windows, int classes) {
    std::vector<std::vector<double>> stream(static_cast<std::size_t>(windows));
    for (auto& probs : stream) {
        probs.resize(static_cast<std::size_t>(classes));
        double sum = 0.0;
        for (double& p : probs) {
            p = rng.uniform();
            sum += p;
        }
        for (double& p : probs) p /= sum;
    }
    return stream;
}

} // namespace

TEST_CASE("unanimous streams elect the unanimous class") {
    std::vector<std::vector<double>> stream(9, {0.05, 0.8, 0.15});
    const VoteResult result = aggregate_votes(stream);
    REQUIRE(result.predicted == 1);
    REQUIRE(result.vote_counts[1] == 9);
    REQUIRE(result.vote_counts[0] == 0);
    REQUIRE(result.window_count == 9);
}

TEST_CASE("vote ties break by cumulative probability") {
    // Two classes, equal vote counts; class 1 has more cumulative mass.
    std::vector<std::vector<double>> stream = {
        {0.60, 0.40},
        {0.45, 0.55},
        {0.51, 0.49},
        {0.10, 0.90},
    };
    const VoteResult result = aggregate_votes(stream);
    REQUIRE(result.vote_counts[0] == 2);
    REQUIRE(result.vote_counts[1] == 2);
    REQUIRE(result.cumulative_prob[1] > result.cumulative_prob[0]);
    REQUIRE(result.predicted == 1);
}

TEST_CASE("full ties resolve to the lowest class index") {
    std::vector<std::vector<double>> stream = {
        {0.7, 0.3},
        {0.3, 0.7},
    };
    const VoteResult result = aggregate_votes(stream);
    REQUIRE(result.vote_counts[0] == result.vote_counts[1]);
    REQUIRE(result.cumulative_prob[0] == Approx(result.cumulative_prob[1]));
    REQUIRE(result.predicted == 0);
}

TEST_CASE("vote totals equal the number of windows") {
    Rng rng(50);
    for (int trial = 0; trial < 50; ++trial) {
        const int windows = static_cast<int>(rng.uniform_int(1, 200));
        const int classes = static_cast<int>(rng.uniform_int(2, 12));
        const auto stream = random_stream(rng, windows, classes);
        const VoteResult result = aggregate_votes(stream);
        int total = 0;
        for (int c : result.vote_counts) total += c;
        REQUIRE(total == windows);
        REQUIRE(result.window_count == windows);
    }
}

TEST_CASE("aggregate_votes matches the independent oracle on random streams") {
    Rng rng(51);
    for (int trial = 0; trial < 2000; ++trial) {
        const int windows = static_cast<int>(rng.uniform_int(1, 60));
        const int classes = static_cast<int>(rng.uniform_int(2, 9));
        const auto stream = random_stream(rng, windows, classes);
        REQUIRE(aggregate_votes(stream).predicted == oracle_winner(stream));
    }
}

TEST_CASE("majority vote is invariant under window reordering") {
    Rng rng(52);
    auto stream = random_stream(rng, 40, 5);
    const VoteResult base = aggregate_votes(stream);
    for (int trial = 0; trial < 20; ++trial) {
        rng.shuffle(stream);
        const VoteResult shuffled = aggregate_votes(stream);
        REQUIRE(shuffled.predicted == base.predicted);
        REQUIRE(shuffled.vote_counts == base.vote_counts);
        for (std::size_t c = 0; c < base.cumulative_prob.size(); ++c) {
            REQUIRE(shuffled.cumulative_prob[c] == Approx(base.cumulative_prob[c]).margin(1e-9));
        }
    }
}

TEST_CASE("metrics on a three-user example") {
    // Per-class accuracies 1.0, 0.5, 0.0 -> macro 0.5, min 0.0.
    std::vector<LabeledVote> votes;
    auto vote_for = [](int c) {
        VoteResult v;
        v.predicted = c;
        return v;
    };
    votes.push_back({0, vote_for(0)});
    votes.push_back({0, vote_for(0)});
    votes.push_back({1, vote_for(1)});
    votes.push_back({1, vote_for(2)});
    votes.push_back({2, vote_for(0)});
    votes.push_back({2, vote_for(1)});
    const MetricSet metrics = compute_metrics(votes, 3);
    REQUIRE(metrics.per_class_accuracy[0] == 1.0);
    REQUIRE(metrics.per_class_accuracy[1] == 0.5);
    REQUIRE(metrics.per_class_accuracy[2] == 0.0);
    REQUIRE(metrics.macro_accuracy == Approx(0.5));
    REQUIRE(metrics.min_accuracy == 0.0);
}

TEST_CASE("all-correct predictions give unit metrics") {
    std::vector<LabeledVote> votes;
    for (int c = 0; c < 4; ++c) {
        VoteResult v;
        v.predicted = c;
        votes.push_back({c, v});
    }
    const MetricSet metrics = compute_metrics(votes, 4);
    REQUIRE(metrics.macro_accuracy == 1.0);
    REQUIRE(metrics.min_accuracy == 1.0);
}

TEST_CASE("macro accuracy ignores class imbalance") {
    // User A: 10 segments, 9 correct. User B: 1 segment, 0 correct.
    std::vector<LabeledVote> votes;
    for (int i = 0; i < 10; ++i) {
        VoteResult v;
        v.predicted = i < 9 ? 0 : 1;
        votes.push_back({0, v});
    }
    {
        VoteResult v;
        v.predicted = 0;
        votes.push_back({1, v});
    }
    const MetricSet metrics = compute_metrics(votes, 2);
    // Hand-computed confusion table: class 0 -> 0.9, class 1 -> 0.0.
    REQUIRE(metrics.macro_accuracy == Approx(0.45));
    REQUIRE(metrics.min_accuracy == 0.0);
}

TEST_CASE("classes with zero segments are excluded and reported") {
    std::vector<LabeledVote> votes;
    VoteResult v;
    v.predicted = 0;
    votes.push_back({0, v});
    const MetricSet metrics = compute_metrics(votes, 3);
    REQUIRE(metrics.excluded_classes == std::vector<int>{1, 2});
    REQUIRE(metrics.macro_accuracy == 1.0);
    REQUIRE(metrics.per_class_accuracy[1] == -1.0);
}

TEST_CASE("macro and min match hand-computed confusion tables") {
    Rng rng(53);
    for (int trial = 0; trial < 50; ++trial) {
        const int classes = static_cast<int>(rng.uniform_int(2, 10));
        std::vector<LabeledVote> votes;
        std::vector<std::vector<int>> confusion(static_cast<std::size_t>(classes),
                                                std::vector<int>(static_cast<std::size_t>(classes), 0));
        for (int c = 0; c < classes; ++c) {
            const int segments = static_cast<int>(rng.uniform_int(1, 30));
            for (int s = 0; s < segments; ++s) {
                const int predicted = static_cast<int>(rng.uniform_int(0, classes - 1));
                confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(predicted)]++;
                VoteResult v;
                v.predicted = predicted;
                votes.push_back({c, v});
            }
        }
        // Hand path over the confusion table.
        double sum = 0.0, min_acc = 1.0;
        for (int c = 0; c < classes; ++c) {
            int total = 0;
            for (int p = 0; p < classes; ++p) total += confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(p)];
            const double acc =
                static_cast<double>(confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)]) / total;
            sum += acc;
            min_acc = std::min(min_acc, acc);
        }
        const MetricSet metrics = compute_metrics(votes, classes);
        REQUIRE(metrics.macro_accuracy == Approx(sum / classes).margin(1e-12));
        REQUIRE(metrics.min_accuracy == Approx(min_acc).margin(1e-12));
    }
}

TEST_CASE("identify_segment rejects segments shorter than one window") {
    FeatureSequence seq;
    seq.kind = EncodingKind::BRA;
    seq.rate_hz = 15.0;
    seq.frames.resize(100);
    ModelConfig cfg;
    cfg.architecture = Architecture::CNN;
    cfg.class_count = 3;
    cfg.cnn_channels = {4};
    cfg.window_length = 300;
    auto model = build_model<double>(cfg);
    WindowSpec spec;
    spec.length_frames = 300;
    const SequenceSlice segment{&seq, 0, seq.frames.size(), 0};
    REQUIRE_THROWS_AS(identify_segment(*model, NormStats::disabled_stats(), segment, spec),
                      TooShortError);
}

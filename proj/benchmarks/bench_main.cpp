#include <benchmark/benchmark.h>

#include "vidcls/classifier.hpp"
#include "vidcls/metrics.hpp"
#include "vidcls/pooling.hpp"
#include "vidcls/tensor.hpp"

namespace {

using namespace vidcls;

FeatureSequence bench_sequence(int t, int d, std::uint64_t seed) {
    RngStream rng(seed);
    FeatureSequence seq;
    seq.id = "bench";
    seq.labels = {0, 1};
    seq.frames = gaussian({t, d}, rng);
    return seq;
}

void BM_Matmul64(benchmark::State& state) {
    RngStream rng(1);
    auto a = gaussian({64, 64}, rng);
    auto b = gaussian({64, 64}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(a, b));
    }
}
BENCHMARK(BM_Matmul64);

void BM_EncodeLstm(benchmark::State& state) {
    const int t = static_cast<int>(state.range(0));
    RngStream rng(2);
    auto params = make_lstm_params(64, 64, false, rng);
    auto seq = bench_sequence(t, 64, 3);
    LstmOptions opts;
    for (auto _ : state) {
        RngStream fwd(4);
        benchmark::DoNotOptimize(encode_lstm(seq, params, opts, fwd, Mode::train));
    }
    state.SetItemsProcessed(state.iterations() * t);
}
BENCHMARK(BM_EncodeLstm)->Arg(10)->Arg(30);

void BM_EncodeLstmBackward(benchmark::State& state) {
    RngStream rng(2);
    auto params = make_lstm_params(64, 64, false, rng);
    auto seq = bench_sequence(20, 64, 3);
    LstmOptions opts;
    for (auto _ : state) {
        RngStream fwd(4);
        auto out = sum_all(encode_lstm(seq, params, opts, fwd, Mode::train));
        backward(out);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_EncodeLstmBackward);

void BM_EncodeAttention(benchmark::State& state) {
    auto seq = bench_sequence(30, 64, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode_self_attention(seq));
    }
}
BENCHMARK(BM_EncodeAttention);

void BM_MoeScore(benchmark::State& state) {
    RngStream rng(6);
    auto params = make_moe_params(50, 2, 256, rng);
    auto pooled = gaussian({256}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(moe_score(pooled, params));
    }
}
BENCHMARK(BM_MoeScore);

void BM_GapAt20(benchmark::State& state) {
    RngStream rng(7);
    PredictionBatch batch;
    for (int v = 0; v < 500; ++v) {
        VideoPrediction pred;
        pred.video_id = "v" + std::to_string(v);
        pred.labels = {v % 50, (v * 7) % 50};
        std::sort(pred.labels.begin(), pred.labels.end());
        if (pred.labels[0] == pred.labels[1]) pred.labels.pop_back();
        std::vector<double> scores(50);
        for (auto& s : scores) s = rng.next_uniform();
        pred.pairs = top_k(*tensor({50}, scores), 20);
        batch.push_back(std::move(pred));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(gap_at_k(batch, 20));
    }
    state.SetItemsProcessed(state.iterations() * 500);
}
BENCHMARK(BM_GapAt20);

}  // namespace

BENCHMARK_MAIN();

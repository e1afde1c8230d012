#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "medaug/corpus.hpp"
#include "medaug/genlm.hpp"
#include "medaug/rng.hpp"
#include "medaug/tensor.hpp"
#include "medaug/vocab.hpp"

using namespace medaug;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(rows * cols);
    for (double& x : v) x = rng.normal();
    return Tensor({rows, cols}, std::move(v));
}

void matmul_forward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Tensor a = random_tensor(n, n, 1);
    Tensor b = random_tensor(n, n, 2);
    for (auto _ : state) {
        Tape tape(false);
        benchmark::DoNotOptimize(tape.matmul(a, b));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(matmul_forward)->Range(16, 128)->Complexity(benchmark::oNCubed);

void matmul_backward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Tensor a = random_tensor(n, n, 3);
    Tensor b = random_tensor(n, n, 4);
    a.set_requires_grad(true);
    b.set_requires_grad(true);
    for (auto _ : state) {
        a.zero_grad();
        b.zero_grad();
        Tape tape;
        Tensor c = tape.matmul(a, b);
        tape.backward(tape.sum_all(c));
        benchmark::DoNotOptimize(a.grad());
    }
}
BENCHMARK(matmul_backward)->Range(16, 128);

void softmax_cross_entropy(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    Tensor logits = random_tensor(rows, 64, 5);
    logits.set_requires_grad(true);
    std::vector<std::size_t> targets(rows);
    Rng rng(6);
    for (auto& t : targets) t = rng.index(64);
    for (auto _ : state) {
        logits.zero_grad();
        Tape tape;
        Tensor loss = tape.cross_entropy(logits, targets);
        tape.backward(loss);
        benchmark::DoNotOptimize(loss.value()[0]);
    }
}
BENCHMARK(softmax_cross_entropy)->Range(8, 256);

void layer_norm_forward(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    Tensor x = random_tensor(rows, 64, 7);
    Tensor gain = random_tensor(1, 64, 8);
    Tensor bias = random_tensor(1, 64, 9);
    for (auto _ : state) {
        Tape tape(false);
        benchmark::DoNotOptimize(tape.layer_norm(x, gain, bias));
    }
}
BENCHMARK(layer_norm_forward)->Range(8, 256);

void generator_step(benchmark::State& state) {
    std::vector<LabeledDocument> docs{
        {"a", 1, "one two three four five six seven eight", DocOrigin::original}};
    Vocabulary vocab = Vocabulary::build(docs, 1);
    GeneratorConfig cfg;
    cfg.d_model = static_cast<std::size_t>(state.range(0));
    cfg.n_heads = 2;
    cfg.n_blocks = 2;
    cfg.context_len = 64;
    GeneratorModel model(vocab, cfg, 10);
    std::vector<std::size_t> ids = encode_labeled(docs[0], vocab, 32);
    std::vector<std::size_t> targets(ids.begin() + 1, ids.end());
    ids.pop_back();
    for (auto _ : state) {
        Tape tape;
        Tensor loss = tape.cross_entropy(model.logits(tape, ids), targets);
        tape.backward(loss);
        benchmark::DoNotOptimize(loss.value()[0]);
    }
}
BENCHMARK(generator_step)->Arg(32)->Arg(64);

}  // namespace

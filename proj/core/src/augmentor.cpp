#include "medaug/augmentor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "json.hpp"
#include "medaug/errors.hpp"

namespace medaug {

const char* to_string(PromptMode mode) {
    return mode == PromptMode::with_context ? "with_context" : "without_context";
}

const char* to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::none: return "none";
        case StrategyKind::base: return "base";
        case StrategyKind::confidence_filter: return "confidence_filter";
        case StrategyKind::medaug: return "medaug";
    }
    return "?";
}

const char* to_string(KlScope scope) {
    return scope == KlScope::all_samples ? "all_samples" : "synthetic_only";
}

PromptMode prompt_mode_from_string(const std::string& s) {
    if (s == "with_context") return PromptMode::with_context;
    if (s == "without_context") return PromptMode::without_context;
    throw ValidationError("unknown prompt mode: " + s);
}

StrategyKind strategy_kind_from_string(const std::string& s) {
    if (s == "none") return StrategyKind::none;
    if (s == "base") return StrategyKind::base;
    if (s == "confidence_filter") return StrategyKind::confidence_filter;
    if (s == "medaug") return StrategyKind::medaug;
    throw ValidationError("unknown strategy: " + s);
}

KlScope kl_scope_from_string(const std::string& s) {
    if (s == "all_samples") return KlScope::all_samples;
    if (s == "synthetic_only") return KlScope::synthetic_only;
    throw ValidationError("unknown kl scope: " + s);
}

void validate_plan(const AugmentationPlan& plan) {
    if (plan.label != 1) throw ValidationError("generation targets the positive label only");
    if (!(plan.temperature > 0.0)) throw ValidationError("temperature must be positive");
    if (plan.top_k == 0) throw ValidationError("top_k must be at least 1");
    // room for [LBL, SEP, ctx, ctx] plus at least one generated token
    if (plan.max_len < 5) throw ValidationError("max_len leaves no room to generate");
}

std::vector<LabeledDocument> generate_synthetic(const GeneratorModel& g_tuned,
                                                const AugmentationPlan& plan,
                                                const std::vector<LabeledDocument>& train_docs) {
    validate_plan(plan);
    if (plan.count == 0) return {};

    std::vector<const LabeledDocument*> positives;
    if (plan.prompt_mode == PromptMode::with_context) {
        for (const LabeledDocument& doc : train_docs)
            if (doc.label == 1) positives.push_back(&doc);
        if (positives.empty())
            throw ValidationError("with-context prompts need a positive training document");
    }

    Rng ctx_rng(derive_seed(plan.seed, "context"));
    std::unordered_set<std::string> seen;
    std::vector<LabeledDocument> out;
    out.reserve(plan.count);
    const std::size_t budget = 10 * plan.count;
    char idbuf[32];
    for (std::size_t attempt = 0; attempt < budget && out.size() < plan.count; ++attempt) {
        PromptSpec prompt;
        prompt.label = plan.label;
        prompt.temperature = plan.temperature;
        prompt.top_k = plan.top_k;
        prompt.max_len = plan.max_len;
        prompt.seed = derive_seed(plan.seed, "gen-" + std::to_string(attempt));
        if (plan.prompt_mode == PromptMode::with_context) {
            const LabeledDocument& ctx = *positives[ctx_rng.index(positives.size())];
            std::vector<std::string> tokens = tokenize(ctx.text);
            tokens.resize(std::min<std::size_t>(tokens.size(), 2));
            prompt.context = std::move(tokens);
        }

        LabeledDocument doc = sample(g_tuned, prompt);
        if (tokenize(doc.text).empty()) continue;
        if (plan.dedup && !seen.insert(doc.text).second) continue;

        std::snprintf(idbuf, sizeof(idbuf), "syn-%06zu", out.size());
        doc.id = idbuf;
        out.push_back(std::move(doc));
    }
    if (out.size() < plan.count) throw GenerationStarvation(out.size(), plan.count);
    return out;
}

std::vector<LabeledDocument> strategy_base(const std::vector<LabeledDocument>& train,
                                           const std::vector<LabeledDocument>& synthetic) {
    std::unordered_set<std::string> ids;
    ids.reserve(train.size() + synthetic.size());
    for (const LabeledDocument& doc : train)
        if (!ids.insert(doc.id).second) throw ValidationError("duplicate id: " + doc.id);
    for (const LabeledDocument& doc : synthetic)
        if (!ids.insert(doc.id).second) throw ValidationError("duplicate id: " + doc.id);

    std::vector<LabeledDocument> combined = train;
    combined.insert(combined.end(), synthetic.begin(), synthetic.end());
    return combined;
}

std::vector<LabeledDocument> strategy_confidence_filter(
    const std::vector<LabeledDocument>& train, const std::vector<LabeledDocument>& synthetic,
    double keep_fraction, std::uint64_t seed, const ClassifierConfig& clf_cfg,
    const ClfTrainConfig& train_cfg) {
    if (!(keep_fraction > 0.0) || keep_fraction > 1.0)
        throw ValidationError("keep_fraction must lie in (0,1]");
    if (synthetic.empty()) return strategy_base(train, synthetic);

    Vocabulary vocab = Vocabulary::build(train, 1);
    ClassifierModel scorer(vocab, clf_cfg, derive_seed(seed, "filter-init"));
    ClfTrainConfig cfg = train_cfg;
    cfg.seed = derive_seed(seed, "filter-train");
    clf_train(scorer, train, cfg);

    // rank by confidence in the doc's own label, ties by id
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(synthetic.size());
    for (std::size_t i = 0; i < synthetic.size(); ++i) {
        const LabeledDocument& doc = synthetic[i];
        double conf = scorer.predict_proba(doc)[static_cast<std::size_t>(doc.label)];
        ranked.emplace_back(conf, i);
    }
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return synthetic[a.second].id < synthetic[b.second].id;
    });
    const auto keep =
        static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(synthetic.size())));

    std::vector<bool> kept(synthetic.size(), false);
    for (std::size_t r = 0; r < keep && r < ranked.size(); ++r) kept[ranked[r].second] = true;
    std::vector<LabeledDocument> selected;
    selected.reserve(keep);
    for (std::size_t i = 0; i < synthetic.size(); ++i)
        if (kept[i]) selected.push_back(synthetic[i]);
    return strategy_base(train, selected);
}

AugmentationOutcome run_augmentation(const CorpusSplit& split, const GeneratorModel& g_tuned,
                                     const AugmentationPlan& plan,
                                     const StrategyChoice& strategy) {
    AugmentationOutcome outcome;
    outcome.requested = strategy.kind == StrategyKind::none ? 0 : plan.count;

    nlohmann::json report;
    report["strategy"] = to_string(strategy.kind);
    report["seed"] = plan.seed;
    report["train_count"] = split.train.size();

    if (strategy.kind == StrategyKind::none) {
        outcome.combined = split.train;
    } else {
        std::vector<LabeledDocument> synthetic = generate_synthetic(g_tuned, plan, split.train);
        outcome.realized = synthetic.size();
        report["prompt_mode"] = to_string(plan.prompt_mode);
        report["dedup"] = plan.dedup;
        report["temperature"] = plan.temperature;
        report["top_k"] = plan.top_k;
        report["max_len"] = plan.max_len;
        switch (strategy.kind) {
            case StrategyKind::base:
                outcome.combined = strategy_base(split.train, synthetic);
                break;
            case StrategyKind::confidence_filter:
                report["keep_fraction"] = strategy.keep_fraction;
                outcome.combined =
                    strategy_confidence_filter(split.train, synthetic, strategy.keep_fraction,
                                               derive_seed(plan.seed, "filter"));
                break;
            case StrategyKind::medaug:
                report["tau"] = strategy.tau;
                report["kl_scope"] = to_string(strategy.kl_scope);
                outcome.combined = strategy_base(split.train, synthetic);
                outcome.kl_flag = true;
                break;
            case StrategyKind::none:
                break;
        }
    }

    outcome.kept = outcome.combined.size() - split.train.size();
    report["requested"] = outcome.requested;
    report["realized"] = outcome.realized;
    report["kept"] = outcome.kept;
    report["combined_count"] = outcome.combined.size();
    outcome.report_json = report.dump(2);
    return outcome;
}

void assert_no_synthetic(const std::vector<LabeledDocument>& docs, const std::string& where) {
    for (const LabeledDocument& doc : docs)
        if (doc.origin != DocOrigin::original)
            throw ValidationError("synthetic document " + doc.id + " leaked into " + where);
}

}  // namespace medaug

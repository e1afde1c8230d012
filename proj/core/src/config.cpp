#include "medaug/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "medaug/errors.hpp"
#include "medaug/fsio.hpp"

namespace medaug {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_list(const std::string& value, std::size_t line) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        if (comma == std::string::npos) comma = value.size();
        std::string item = trim(value.substr(start, comma - start));
        if (item.empty()) throw ParseError("empty list item", line);
        items.push_back(std::move(item));
        start = comma + 1;
    }
    return items;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("expected an unsigned integer, got '" + s + "'", line);
    return v;
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("expected a number, got '" + s + "'", line);
    return v;
}

bool parse_bool(const std::string& s, std::size_t line) {
    std::string v = lower(s);
    if (v == "true" || v == "yes" || v == "y" || v == "1") return true;
    if (v == "false" || v == "no" || v == "n" || v == "0") return false;
    throw ParseError("expected a boolean, got '" + s + "'", line);
}

}  // namespace

IniFile IniFile::parse(const std::string& text) {
    IniFile ini;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;

        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ParseError("malformed section header '" + line + "'", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ParseError("empty section name", line_no);
            if (ini.section_lines_.count(section))
                throw ParseError("duplicate section [" + section + "]", line_no);
            ini.section_lines_[section] = line_no;
            continue;
        }

        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key = value, got '" + line + "'", line_no);
        if (section.empty())
            throw ParseError("key outside of any [section]", line_no);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line_no);
        auto [it, inserted] = ini.sections_[section].emplace(key, IniEntry{value, line_no});
        if (!inserted)
            throw ParseError("duplicate key '" + key + "' in [" + section + "]", line_no);
    }
    return ini;
}

IniFile IniFile::load(const std::string& path) { return parse(read_file(path)); }

const IniEntry* IniFile::find(const std::string& section, const std::string& key) const {
    auto sec = sections_.find(section);
    if (sec == sections_.end()) return nullptr;
    auto it = sec->second.find(key);
    if (it == sec->second.end()) return nullptr;
    it->second.used = true;
    return &it->second;
}

std::string IniFile::get_string(const std::string& section, const std::string& key,
                                const std::string& fallback) const {
    const IniEntry* e = find(section, key);
    return e ? e->value : fallback;
}

std::string IniFile::require_string(const std::string& section, const std::string& key) const {
    const IniEntry* e = find(section, key);
    if (!e)
        throw ParseError("missing required key '" + key + "' in [" + section + "]",
                         std::max<std::size_t>(section_line(section), 1));
    return e->value;
}

std::size_t IniFile::get_size(const std::string& section, const std::string& key,
                              std::size_t fallback) const {
    const IniEntry* e = find(section, key);
    return e ? static_cast<std::size_t>(parse_u64(e->value, e->line)) : fallback;
}

std::uint64_t IniFile::get_u64(const std::string& section, const std::string& key,
                               std::uint64_t fallback) const {
    const IniEntry* e = find(section, key);
    return e ? parse_u64(e->value, e->line) : fallback;
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
    const IniEntry* e = find(section, key);
    return e ? parse_double(e->value, e->line) : fallback;
}

bool IniFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const IniEntry* e = find(section, key);
    return e ? parse_bool(e->value, e->line) : fallback;
}

std::vector<std::string> IniFile::get_string_list(
    const std::string& section, const std::string& key,
    const std::vector<std::string>& fallback) const {
    const IniEntry* e = find(section, key);
    return e ? split_list(e->value, e->line) : fallback;
}

std::vector<std::size_t> IniFile::get_size_list(const std::string& section,
                                                const std::string& key,
                                                const std::vector<std::size_t>& fallback) const {
    const IniEntry* e = find(section, key);
    if (!e) return fallback;
    std::vector<std::size_t> out;
    for (const std::string& item : split_list(e->value, e->line))
        out.push_back(static_cast<std::size_t>(parse_u64(item, e->line)));
    return out;
}

std::vector<double> IniFile::get_double_list(const std::string& section, const std::string& key,
                                             const std::vector<double>& fallback) const {
    const IniEntry* e = find(section, key);
    if (!e) return fallback;
    std::vector<double> out;
    for (const std::string& item : split_list(e->value, e->line))
        out.push_back(parse_double(item, e->line));
    return out;
}

std::vector<std::uint64_t> IniFile::get_u64_list(
    const std::string& section, const std::string& key,
    const std::vector<std::uint64_t>& fallback) const {
    const IniEntry* e = find(section, key);
    if (!e) return fallback;
    std::vector<std::uint64_t> out;
    for (const std::string& item : split_list(e->value, e->line))
        out.push_back(parse_u64(item, e->line));
    return out;
}

std::size_t IniFile::section_line(const std::string& section) const {
    auto it = section_lines_.find(section);
    return it == section_lines_.end() ? 0 : it->second;
}

void IniFile::reject_unused() const {
    const IniEntry* worst = nullptr;
    std::string where;
    for (const auto& [section, entries] : sections_) {
        for (const auto& [key, entry] : entries) {
            if (!entry.used && (!worst || entry.line < worst->line)) {
                worst = &entry;
                where = "unknown key '" + key + "' in [" + section + "]";
            }
        }
    }
    if (worst) throw ParseError(where, worst->line);
}

const char* to_string(ExperimentMode mode) {
    switch (mode) {
        case ExperimentMode::compare_strategies: return "compare_strategies";
        case ExperimentMode::synth_count: return "synth_count";
        case ExperimentMode::finetune_modes: return "finetune_modes";
        case ExperimentMode::model_size: return "model_size";
    }
    return "?";
}

ExperimentMode experiment_mode_from_string(const std::string& s) {
    if (s == "compare_strategies") return ExperimentMode::compare_strategies;
    if (s == "synth_count") return ExperimentMode::synth_count;
    if (s == "finetune_modes") return ExperimentMode::finetune_modes;
    if (s == "model_size") return ExperimentMode::model_size;
    throw ValidationError("unknown experiment mode: " + s);
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    IniFile ini = IniFile::parse(text);
    ExperimentConfig cfg;
    cfg.config_text = text;

    auto anchored = [&](const std::string& section, const std::string& key,
                        const std::string& msg) -> ParseError {
        const IniEntry* e = ini.find(section, key);
        std::size_t line = e ? e->line : std::max<std::size_t>(ini.section_line(section), 1);
        return ParseError(msg, line);
    };

    // [run]
    {
        std::string mode = ini.require_string("run", "mode");
        try {
            cfg.mode = experiment_mode_from_string(mode);
        } catch (const ValidationError& e) {
            throw anchored("run", "mode", e.what());
        }
        cfg.seeds = ini.get_u64_list("run", "seeds", {});
        if (cfg.seeds.empty()) throw anchored("run", "seeds", "at least one seed is required");
        cfg.output_dir = ini.require_string("run", "output_dir");
    }

    // [benchmark]
    cfg.benchmark.n_docs = ini.get_size("benchmark", "n_docs", 5000);
    cfg.benchmark.content_vocab = ini.get_size("benchmark", "content_vocab", 200);
    cfg.benchmark.positive_phrases = ini.get_size("benchmark", "positive_phrases", 12);
    cfg.benchmark.negative_phrases = ini.get_size("benchmark", "negative_phrases", 12);
    cfg.benchmark.len_min = ini.get_size("benchmark", "len_min", 18);
    cfg.benchmark.len_max = ini.get_size("benchmark", "len_max", 36);
    cfg.benchmark.positive_prior = ini.get_double("benchmark", "positive_prior", 0.2);
    cfg.benchmark.label_noise = ini.get_double("benchmark", "label_noise", 0.0);
    cfg.ratios.valid = ini.get_double("benchmark", "valid_frac", 0.1);
    cfg.ratios.test = ini.get_double("benchmark", "test_frac", 0.1);
    cfg.ratios.train = 1.0 - cfg.ratios.valid - cfg.ratios.test;
    try {
        validate(cfg.benchmark);
        if (cfg.ratios.train <= 0.0)
            throw ValidationError("valid_frac + test_frac must leave room for train");
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), std::max<std::size_t>(ini.section_line("benchmark"), 1));
    }

    // [generator]
    cfg.d_model_sweep = ini.get_size_list("generator", "d_model", {64});
    if (cfg.d_model_sweep.empty())
        throw anchored("generator", "d_model", "d_model list must be non-empty");
    if (cfg.mode != ExperimentMode::model_size && cfg.d_model_sweep.size() != 1)
        throw anchored("generator", "d_model",
                       "d_model accepts a list only in model_size mode");
    cfg.gen.generator.d_model = cfg.d_model_sweep.front();
    cfg.gen.generator.n_heads = ini.get_size("generator", "n_heads", 2);
    cfg.gen.generator.n_blocks = ini.get_size("generator", "n_blocks", 2);
    cfg.gen.generator.context_len = ini.get_size("generator", "context_len", 128);
    cfg.gen.generator.ffn_mult = ini.get_size("generator", "ffn_mult", 4);
    cfg.gen.generator.init_scale = ini.get_double("generator", "init_scale", 0.02);
    cfg.gen.finetune.epochs = ini.get_size("generator", "epochs", 3);
    cfg.gen.finetune.learning_rate = ini.get_double("generator", "learning_rate", 1e-3);
    cfg.gen.finetune.batch_size = ini.get_size("generator", "batch_size", 16);
    cfg.gen.vocab_min_freq = ini.get_size("generator", "vocab_min_freq", 1);

    // [classifier]
    cfg.clf.embed_dim = ini.get_size("classifier", "embed_dim", 32);
    cfg.clf.hidden_dim = ini.get_size("classifier", "hidden_dim", 64);
    cfg.clf.init_scale = ini.get_double("classifier", "init_scale", 0.02);
    cfg.clf_train_cfg.epochs = ini.get_size("classifier", "epochs", 8);
    cfg.clf_train_cfg.learning_rate = ini.get_double("classifier", "learning_rate", 5e-3);
    cfg.clf_train_cfg.batch_size = ini.get_size("classifier", "batch_size", 32);

    // [augmentation]
    cfg.synth_counts = ini.get_size_list("augmentation", "counts", {900});
    if (cfg.synth_counts.empty())
        throw anchored("augmentation", "counts", "counts list must be non-empty");
    {
        std::string mode = ini.get_string("augmentation", "prompt_mode", "with_context");
        try {
            cfg.plan.prompt_mode = prompt_mode_from_string(mode);
        } catch (const ValidationError& e) {
            throw anchored("augmentation", "prompt_mode", e.what());
        }
    }
    cfg.gen.balanced = ini.get_bool("augmentation", "balanced", true);
    cfg.plan.dedup = ini.get_bool("augmentation", "dedup", true);
    cfg.plan.temperature = ini.get_double("augmentation", "temperature", 1.0);
    cfg.plan.top_k = ini.get_size("augmentation", "top_k", 40);
    cfg.plan.max_len = ini.get_size("augmentation", "max_len", 64);
    cfg.synthetic_noise = ini.get_double("augmentation", "synthetic_noise", 0.0);
    if (cfg.synthetic_noise < 0.0 || cfg.synthetic_noise > 1.0)
        throw anchored("augmentation", "synthetic_noise",
                       "synthetic_noise must lie in [0,1]");
    try {
        AugmentationPlan probe = cfg.plan;
        probe.count = cfg.synth_counts.front();
        validate_plan(probe);
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), std::max<std::size_t>(ini.section_line("augmentation"), 1));
    }

    // [strategies]
    {
        std::vector<std::string> names = ini.get_string_list("strategies", "list", {"base"});
        for (const std::string& name : names) {
            try {
                cfg.strategies.push_back(strategy_kind_from_string(name));
            } catch (const ValidationError& e) {
                throw anchored("strategies", "list", e.what());
            }
        }
        cfg.keep_fraction = ini.get_double("strategies", "keep_fraction", 0.5);
        if (!(cfg.keep_fraction > 0.0) || cfg.keep_fraction > 1.0)
            throw anchored("strategies", "keep_fraction", "keep_fraction must lie in (0,1]");
    }

    // [distill]
    cfg.taus = ini.get_double_list("distill", "taus", {1.0});
    if (cfg.taus.empty()) throw anchored("distill", "taus", "taus list must be non-empty");
    for (double tau : cfg.taus)
        if (tau < 0.0) throw anchored("distill", "taus", "tau must be nonnegative");
    {
        std::string scope = ini.get_string("distill", "kl_scope", "all_samples");
        try {
            cfg.kl_scope = kl_scope_from_string(scope);
        } catch (const ValidationError& e) {
            throw anchored("distill", "kl_scope", e.what());
        }
        std::string dir = ini.get_string("distill", "kl_direction", "teacher_student");
        try {
            cfg.kl_direction = kl_direction_from_string(dir);
        } catch (const ValidationError& e) {
            throw anchored("distill", "kl_direction", e.what());
        }
    }

    ini.reject_unused();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_file(path));
}

}  // namespace medaug

#include "tpt/curator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "tpt/dataset_io.hpp"
#include "tpt/digest.hpp"
#include "tpt/error.hpp"
#include "tpt/keyed_rng.hpp"
#include "tpt/text.hpp"

namespace tpt::curator {
using nlohmann::json;

namespace {

struct Candidate {
    TrainingPair pair;
    std::string normalized;
};

std::uint64_t selection_key(std::int64_t seed, std::string_view stage, const Candidate& c) {
    return hash_key({seed, stage, std::string_view(c.pair.problem_id), std::string_view(c.normalized)});
}

void sort_by_key(std::vector<Candidate>& v, std::int64_t seed, std::string_view stage) {
    std::vector<std::pair<std::uint64_t, std::size_t>> keys;
    keys.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) keys.emplace_back(selection_key(seed, stage, v[i]), i);
    // Ties (astronomically rare) fall back to content so order stays input-independent.
    std::sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        const auto& ca = v[a.second];
        const auto& cb = v[b.second];
        return std::tie(ca.pair.problem_id, ca.normalized) < std::tie(cb.pair.problem_id, cb.normalized);
    });
    std::vector<Candidate> out;
    out.reserve(v.size());
    for (const auto& [key, idx] : keys) out.push_back(std::move(v[idx]));
    v = std::move(out);
}

CuratedDataset select(std::vector<Candidate> candidates, const CurationPolicy& policy, int round) {
    policy.validate();

    // Per-question cap: seeded uniform choice within each question.
    std::map<std::string, std::vector<Candidate>> by_question;
    for (auto& c : candidates) by_question[c.pair.problem_id].push_back(std::move(c));
    std::vector<Candidate> capped;
    for (auto& [id, group] : by_question) {
        sort_by_key(group, policy.seed, "cap");
        const auto take = std::min<std::size_t>(group.size(), static_cast<std::size_t>(policy.per_question_cap));
        std::move(group.begin(), group.begin() + static_cast<std::ptrdiff_t>(take), std::back_inserter(capped));
    }

    const auto target = static_cast<std::size_t>(policy.target_size);
    CuratedDataset out;
    out.source_round = round;
    out.policy_snapshot = policy;
    if (capped.size() < target) {
        if (policy.shortfall == Shortfall::Fail) {
            throw ValidationError(fmt::format("curation shortfall: {} candidates available, target size {}",
                                              capped.size(), target));
        }
        out.shortfall_note = fmt::format("shortfall: {} of {} requested", capped.size(), target);
    }

    sort_by_key(capped, policy.seed, "select");
    if (capped.size() > target) capped.resize(target);
    out.pairs.reserve(capped.size());
    for (auto& c : capped) out.pairs.push_back(std::move(c.pair));
    out.digest = sha256_hex(serialize_dataset(out));
    return out;
}

std::string_view origin_name(PairOrigin o) { return o == PairOrigin::Synthetic ? "synthetic" : "real"; }

}  // namespace

CurationPolicy CurationPolicy::defaults_for(TaskKind kind) {
    CurationPolicy p;
    p.target_size = kind == TaskKind::Math ? 2000 : 1000;
    return p;
}

void CurationPolicy::validate() const {
    if (target_size < 1) throw ConfigError(fmt::format("target_size must be >= 1, got {}", target_size));
    if (per_question_cap < 1) throw ConfigError(fmt::format("per_question_cap must be >= 1, got {}", per_question_cap));
    if (mix && !(mix->real_fraction >= 0.0 && mix->real_fraction <= 1.0)) {
        throw ConfigError(fmt::format("real_fraction {} outside [0, 1]", mix->real_fraction));
    }
}

std::vector<SolutionRecord> dedupe(std::span<const SolutionRecord> records) {
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<SolutionRecord> out;
    for (const auto& r : records) {
        if (seen.emplace(r.problem_id, text::collapse_whitespace(r.text)).second) out.push_back(r);
    }
    return out;
}

CuratedDataset sample_dataset(std::span<const SolutionRecord> unique, const CurationPolicy& policy, int round,
                              const PromptLookup& prompt_for) {
    std::vector<Candidate> candidates;
    candidates.reserve(unique.size());
    std::map<std::string, std::string> prompts;
    for (const auto& r : unique) {
        auto [it, inserted] = prompts.try_emplace(r.problem_id);
        if (inserted) it->second = prompt_for(r.problem_id);
        candidates.push_back(Candidate{TrainingPair{r.problem_id, it->second, r.text, r.round, PairOrigin::Synthetic},
                                       text::collapse_whitespace(r.text)});
    }
    return select(std::move(candidates), policy, round);
}

CuratedDataset sample_pairs(std::span<const TrainingPair> pairs, const CurationPolicy& policy, int round) {
    std::vector<Candidate> candidates;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& p : pairs) {
        auto norm = text::collapse_whitespace(p.completion);
        if (seen.emplace(p.problem_id, norm).second) candidates.push_back(Candidate{p, std::move(norm)});
    }
    return select(std::move(candidates), policy, round);
}

CuratedDataset mix_real(const CuratedDataset& synthetic, const MixSpec& mix, std::span<const TrainingPair> real_pool) {
    if (!(mix.real_fraction >= 0.0 && mix.real_fraction <= 1.0)) {
        throw ConfigError(fmt::format("real_fraction {} outside [0, 1]", mix.real_fraction));
    }
    if (mix.real_fraction == 0.0) return synthetic;

    const auto& policy = synthetic.policy_snapshot;
    const auto target = static_cast<std::size_t>(policy.target_size);
    const auto n_real = static_cast<std::size_t>(std::llround(mix.real_fraction * static_cast<double>(target)));
    const auto n_synth = target - n_real;

    std::vector<Candidate> synth;
    for (const auto& p : synthetic.pairs) synth.push_back(Candidate{p, text::collapse_whitespace(p.completion)});
    sort_by_key(synth, policy.seed, "mix-synthetic");
    if (synth.size() > n_synth) synth.resize(n_synth);

    // One problem never appears twice when the cap is 1.
    std::unordered_set<std::string> used;
    if (policy.per_question_cap == 1) {
        for (const auto& c : synth) used.insert(c.pair.problem_id);
    }
    std::vector<Candidate> real;
    std::set<std::string> real_ids;
    for (const auto& p : real_pool) {
        if (used.count(p.problem_id)) continue;
        if (policy.per_question_cap == 1 && !real_ids.insert(p.problem_id).second) continue;
        auto c = Candidate{p, text::collapse_whitespace(p.completion)};
        c.pair.origin = PairOrigin::Real;
        c.pair.source_round = -1;
        real.push_back(std::move(c));
    }
    if (real.size() < n_real) {
        throw ValidationError(fmt::format("real data insufficient: need {} pairs, {} usable in {}", n_real,
                                          real.size(), mix.real_source.string()));
    }
    sort_by_key(real, policy.seed, "mix-real");
    real.resize(n_real);

    std::vector<Candidate> all = std::move(synth);
    std::move(real.begin(), real.end(), std::back_inserter(all));
    sort_by_key(all, policy.seed, "mix-order");

    CuratedDataset out;
    out.source_round = synthetic.source_round;
    out.policy_snapshot = policy;
    out.policy_snapshot.mix = mix;
    out.shortfall_note = synthetic.shortfall_note;
    for (auto& c : all) out.pairs.push_back(std::move(c.pair));
    out.digest = sha256_hex(serialize_dataset(out));
    return out;
}

std::string serialize_dataset(const CuratedDataset& dataset) {
    std::string out;
    for (const auto& p : dataset.pairs) {
        out += json(p).dump(-1, ' ', false, json::error_handler_t::replace);
        out += '\n';
    }
    return out;
}

void write_dataset(CuratedDataset& dataset, const std::filesystem::path& path) {
    const auto bytes = serialize_dataset(dataset);
    dataset.digest = sha256_hex(bytes);
    write_text_file(bytes, path);
}

std::vector<TrainingPair> read_pairs(const std::filesystem::path& path) {
    std::vector<TrainingPair> out;
    for (const auto& row : read_json_lines(path)) out.push_back(row.get<TrainingPair>());
    return out;
}

void to_json(json& j, const TrainingPair& v) {
    j = json{{"prompt", v.prompt},
             {"completion", v.completion},
             {"problem_id", v.problem_id},
             {"source_round", v.source_round},
             {"origin", origin_name(v.origin)}};
}

void from_json(const json& j, TrainingPair& v) {
    j.at("prompt").get_to(v.prompt);
    j.at("completion").get_to(v.completion);
    j.at("problem_id").get_to(v.problem_id);
    v.source_round = j.value("source_round", -1);
    const auto origin = j.value("origin", std::string{"real"});
    if (origin != "synthetic" && origin != "real") throw ValidationError("unknown pair origin '" + origin + "'");
    v.origin = origin == "synthetic" ? PairOrigin::Synthetic : PairOrigin::Real;
}

void to_json(json& j, const CurationPolicy& v) {
    j = json{{"target_size", v.target_size},
             {"per_question_cap", v.per_question_cap},
             {"accumulate", v.accumulate},
             {"seed", v.seed},
             {"shortfall", v.shortfall == Shortfall::TakeAll ? "take_all" : "fail"}};
    if (v.mix) {
        j["mix"] = json{{"real_fraction", v.mix->real_fraction}, {"real_source", v.mix->real_source.string()}};
    } else {
        j["mix"] = nullptr;
    }
}

void from_json(const json& j, CurationPolicy& v) {
    v.target_size = j.value("target_size", v.target_size);
    v.per_question_cap = j.value("per_question_cap", v.per_question_cap);
    v.accumulate = j.value("accumulate", v.accumulate);
    v.seed = j.value("seed", v.seed);
    const auto shortfall = j.value("shortfall", std::string{"take_all"});
    if (shortfall == "take_all") v.shortfall = Shortfall::TakeAll;
    else if (shortfall == "fail") v.shortfall = Shortfall::Fail;
    else throw ConfigError("unknown shortfall policy '" + shortfall + "'");
    v.mix.reset();
    if (auto it = j.find("mix"); it != j.end() && !it->is_null()) {
        v.mix = MixSpec{it->at("real_fraction").get<double>(), it->at("real_source").get<std::string>()};
    }
}

}  // namespace tpt::curator

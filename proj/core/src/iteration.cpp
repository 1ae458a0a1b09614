#include "apt/iteration.hpp"

#include "apt/error.hpp"
#include "apt/util.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <thread>

namespace apt {

namespace fs = std::filesystem;

bool eligible(const Uri& method, const PropertySet& relations, const TestBundleIndex& bundles) {
    for (auto& r : relations.relations()) {
        if (r.focal == method && bundles.has_bundles(r.related)) return true;
    }
    return false;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
}

// Related methods of `focal` that currently hold bundles.
std::set<Uri> support_of(const Uri& focal, const PropertySet& relations, const TestBundleIndex& bundles) {
    std::set<Uri> out;
    for (auto& r : relations.relations()) {
        if (r.focal == focal && bundles.has_bundles(r.related)) out.insert(r.related);
    }
    return out;
}

std::string verdict_name(const GenerationRecord& rec) {
    return rec.verdict ? std::string(to_string(rec.verdict->kind)) : "GenerationFailure";
}

nlohmann::ordered_json to_json(const RoundSummary& s) {
    nlohmann::ordered_json j;
    j["round"] = s.round;
    j["pending"] = s.pending;
    j["eligible"] = s.eligible;
    j["generated"] = s.generated;
    j["admitted"] = s.admitted;
    j["verdicts"] = nlohmann::ordered_json::object();
    for (auto& [name, count] : s.verdicts) j["verdicts"][name] = count;
    j["newly_covered"] = nlohmann::ordered_json::array();
    for (auto& u : s.newly_covered) j["newly_covered"].push_back(u.value);
    return j;
}

}  // namespace

nlohmann::ordered_json to_json(const IterationReport& report) {
    nlohmann::ordered_json j;
    j["focal_methods"] = report.focal_methods;
    j["initially_covered"] = report.initially_covered;
    j["covered"] = report.covered;
    j["progressing_rounds"] = report.progressing_rounds;
    j["stop_reason"] = report.stop_reason;
    j["verified"] = report.verified;
    j["rounds"] = nlohmann::ordered_json::array();
    for (auto& r : report.rounds) j["rounds"].push_back(to_json(r));
    j["fallback_sweep"] = report.fallback_sweep ? to_json(*report.fallback_sweep) : nlohmann::ordered_json();
    j["trajectories"] = nlohmann::ordered_json::object();
    for (auto& [uri, steps] : report.trajectories) {
        auto& arr = j["trajectories"][uri.value] = nlohmann::ordered_json::array();
        for (auto& s : steps) {
            arr.push_back({{"round", s.round}, {"fallback", s.fallback}, {"verdict", s.verdict}});
        }
    }
    return j;
}

IterationReport iterate_to_fixpoint(const std::vector<Uri>& focal, TestBundleIndex bundles, const IterationHooks& hooks,
                                    const IterationOptions& options) {
    if (options.max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
    IterationReport report;
    const std::set<Uri> focal_set(focal.begin(), focal.end());
    report.focal_methods = focal_set.size();
    auto absorb_bundles = [&](std::vector<Uri>* fresh) {
        for (auto& [uri, list] : bundles.by_method()) {
            if (!list.empty() && focal_set.contains(uri) && report.covered_methods.insert(uri).second && fresh) {
                fresh->push_back(uri);
            }
        }
    };
    absorb_bundles(nullptr);
    report.initially_covered = report.covered_methods.size();

    std::map<Uri, PropertySet> relations;
    std::map<Uri, std::set<Uri>> attempted;  // support at the last attempt
    auto relations_of = [&](const std::vector<Uri>& methods) {
        std::vector<Uri> missing;
        for (auto& m : methods) {
            if (!relations.contains(m)) missing.push_back(m);
        }
        std::vector<PropertySet> computed(missing.size());
        parallel_for(missing.size(), options.jobs, [&](std::size_t i) { computed[i] = hooks.relations(missing[i]); });
        for (std::size_t i = 0; i < missing.size(); ++i) relations.emplace(missing[i], std::move(computed[i]));
    };

    auto run_batch = [&](RoundSummary& summary, const std::vector<Uri>& batch, bool fallback) {
        std::vector<GenerationRecord> records(batch.size());
        parallel_for(batch.size(), options.jobs, [&](std::size_t i) {
            static const PropertySet none;
            auto it = relations.find(batch[i]);
            records[i] = hooks.generate(batch[i], it == relations.end() ? none : it->second, bundles, fallback);
            records[i].focal = batch[i];
            records[i].attempt = summary.round;
        });
        std::vector<std::size_t> admitted;
        for (std::size_t i = 0; i < records.size(); ++i) {
            auto& rec = records[i];
            ++summary.generated;
            ++summary.verdicts[verdict_name(rec)];
            report.trajectories[rec.focal].push_back({summary.round, fallback, verdict_name(rec)});
            if (rec.verdict && !rec.verdict->verified) report.verified = false;
            if (rec.admitted()) {
                ++summary.admitted;
                admitted.push_back(report.records.size());
                if (report.covered_methods.insert(rec.focal).second) summary.newly_covered.push_back(rec.focal);
            }
            report.records.push_back(std::move(rec));
        }
        return admitted;
    };

    report.verified = true;
    report.stop_reason = "max_rounds";
    for (int round = 1; round <= options.max_rounds; ++round) {
        RoundSummary summary;
        summary.round = round;
        std::vector<Uri> pending;
        for (auto& m : focal_set) {
            if (!report.covered_methods.contains(m)) pending.push_back(m);
        }
        summary.pending = pending.size();
        if (pending.empty()) {
            report.stop_reason = "all_covered";
            break;
        }
        relations_of(pending);
        std::vector<Uri> batch;
        for (auto& m : pending) {
            auto support = support_of(m, relations[m], bundles);
            if (support.empty()) continue;
            ++summary.eligible;
            auto seen = attempted.find(m);
            if (seen != attempted.end() && seen->second == support) continue;
            attempted[m] = std::move(support);
            batch.push_back(m);
        }
        if (batch.empty()) {
            report.stop_reason = round == 1 && report.initially_covered == 0 && bundles.empty() ? "no_seeds" : "fixpoint";
            report.rounds.push_back(std::move(summary));
            break;
        }
        auto admitted = run_batch(summary, batch, false);
        if (!admitted.empty()) {
            std::vector<const GenerationRecord*> fresh;
            for (auto i : admitted) fresh.push_back(&report.records[i]);
            bundles = hooks.refresh(fresh);
            std::vector<Uri> more;
            absorb_bundles(&more);
            summary.newly_covered.insert(summary.newly_covered.end(), more.begin(), more.end());
            std::sort(summary.newly_covered.begin(), summary.newly_covered.end());
        }
        const bool progressed = !summary.newly_covered.empty();
        report.rounds.push_back(std::move(summary));
        if (!progressed) {
            report.stop_reason = "fixpoint";
            break;
        }
        ++report.progressing_rounds;
    }

    if (options.fallback_sweep) {
        std::vector<Uri> never;
        for (auto& m : focal_set) {
            if (!report.covered_methods.contains(m) && !attempted.contains(m)) never.push_back(m);
        }
        if (!never.empty()) {
            RoundSummary sweep;
            sweep.round = static_cast<int>(report.rounds.size()) + 1;
            sweep.pending = never.size();
            run_batch(sweep, never, true);
            report.fallback_sweep = std::move(sweep);
        }
    }
    report.covered = report.covered_methods.size();
    return report;
}

std::vector<Uri> focal_methods(const MetainfoDatabase& db) {
    std::vector<Uri> out;
    for (auto& [uri, m] : db.entities().methods) {
        if (m.is_constructor || m.is_private() || !m.has_body) continue;
        const ClassEntity* owner = db.find_class(m.owner);
        if (!owner || owner->kind == ClassKind::test_class) continue;
        out.push_back(uri);
    }
    return out;
}

PropertySet cached_relations(const MethodEntity& focal, const MetainfoDatabase& db, ScopeGraphCache& graphs,
                             LlmGateway& llm, const PromptLibrary& prompts, const RetrievalOptions& options,
                             const std::optional<fs::path>& cache_dir) {
    const ClassEntity* owner = db.find_class(focal.owner);
    if (!owner) throw NotFoundError("owner of " + focal.uri.value + " is not indexed");
    std::optional<fs::path> file;
    if (cache_dir) {
        auto key = sha256_hex(focal.uri.value + "\n" + prompts.get("analyze_properties").hash + "\n" +
                              class_context(db, *owner, options.intra));
        file = *cache_dir / (key + ".json");
    }
    PropertySet intra;
    bool hit = false;
    if (file && fs::exists(*file)) {
        try {
            intra = property_set_from_json(nlohmann::json::parse(read_file(*file)), focal.uri);
            hit = true;
        } catch (const std::exception& e) {
            spdlog::warn("ignoring unreadable relation cache {}: {}", file->string(), e.what());
        }
    }
    if (!hit) {
        auto sc = resolve_ref(focal, db, graphs);
        intra = analyze_intra_class(focal, db, sc, llm, prompts, options.intra);
        if (file) write_file_atomic(*file, to_json(intra, db).dump(2) + "\n");
    }
    auto all = intra;
    all.merge(deduce_inter_class(db, intra, focal, options.damping));
    return all;
}

namespace {

void move_file(const fs::path& from, const fs::path& to) {
    fs::create_directories(to.parent_path());
    std::error_code ec;
    fs::rename(from, to, ec);
    if (ec) {
        fs::copy_file(from, to, fs::copy_options::overwrite_existing);
        fs::remove(from);
    }
}

}  // namespace

IterationReport run_iterations(LlmGateway& llm, const PromptLibrary& prompts, const IterationConfig& config) {
    const fs::path out = config.out_dir.empty() ? config.root / "apt-out" : config.out_dir;
    const fs::path seeds = out / "generated-tests";
    const fs::path candidates = out / "candidates";
    fs::remove_all(seeds);
    fs::remove_all(candidates);
    fs::create_directories(seeds);

    IndexConfig index = config.index;
    index.extra_roots.push_back(seeds);
    {
        std::error_code ec;
        auto rel = fs::relative(seeds, config.root, ec);
        auto rel_s = rel.generic_string();
        index.test_root_globs.push_back((ec || rel_s.rfind("..", 0) == 0 ? seeds.generic_string() : rel_s) + "/**");
    }
    auto db = std::make_unique<MetainfoDatabase>(index_repository(config.root, index));
    ScopeGraphCache graphs(config.root);
    AnalyzeOptions analyze = config.analyze;
    analyze.index = index;

    auto analyze_bundles = [&] {
        auto run = analyze_repository_tests(*db, config.root, llm, prompts, out / "analyses", config.iteration.jobs,
                                            analyze);
        for (auto& f : run.failures) spdlog::warn("test analysis failed for {}: {}", f.path, f.message);
        return build_bundle_index(run.analyses, *db, config.root, analyze.bundle);
    };
    auto bundles = analyze_bundles();

    std::vector<Uri> focal = focal_methods(*db);
    if (!config.only.empty()) {
        std::set<Uri> only(config.only.begin(), config.only.end());
        std::erase_if(focal, [&](const Uri& u) { return !only.contains(u); });
    }

    GenerationOptions gen = config.generation;
    gen.generate.output_root = candidates;

    IterationHooks hooks;
    hooks.relations = [&](const Uri& uri) {
        const MethodEntity* m = db->find_method(uri);
        if (!m) return PropertySet{};
        try {
            return cached_relations(*m, *db, graphs, llm, prompts, config.retrieval, out / "relations");
        } catch (const Error& e) {
            spdlog::warn("property retrieval for {} failed: {}", uri.value, e.what());
            return PropertySet{};
        }
    };
    hooks.generate = [&](const Uri& uri, const PropertySet& relations, const TestBundleIndex& current, bool fallback) {
        const MethodEntity* m = db->find_method(uri);
        if (!m) {
            GenerationRecord rec;
            rec.error = "focal method is no longer indexed";
            return rec;
        }
        GenerationContext ctx{*db, graphs, current, llm, prompts, gen, {}};
        if (config.runner) {
            ctx.verify = [&, m](const GeneratedTest& t) { return verify(t, config.root, *config.runner, *db, *m); };
        }
        auto rec = generate_for_method(*m, relations, ctx, fallback);
        if (rec.admitted() && rec.test) {
            auto dest = seeds / fs::relative(rec.test->path, candidates);
            move_file(rec.test->path, dest);
            rec.test->path = dest;
        }
        return rec;
    };
    hooks.refresh = [&](const std::vector<const GenerationRecord*>&) {
        db = std::make_unique<MetainfoDatabase>(index_repository(config.root, index));
        return analyze_bundles();
    };

    auto report = iterate_to_fixpoint(focal, std::move(bundles), hooks, config.iteration);
    if (!config.runner) report.verified = false;

    std::string lines;
    for (auto& rec : report.records) lines += to_json_line(rec, config.root) + "\n";
    write_file_atomic(out / "results.jsonl", lines);
    write_file_atomic(out / "iteration-report.json", to_json(report).dump(2) + "\n");
    return report;
}

}  // namespace apt

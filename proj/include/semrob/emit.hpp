#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "semrob/errors.hpp"
#include "semrob/plot.hpp"

namespace semrob {

namespace emitdetail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string fmt_json_number(const nlohmann::json& j) {
    if (j.is_null()) return "nan";
    return fmt(j.get<double>());
}

// Write-then-rename so no partial file survives a failure.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw io_error("cannot open for writing: " + tmp.string());
        f << content;
        if (!f) throw io_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string records_csv(const nlohmann::json& records) {
    std::string csv = "node,degree,t_f,t_g,budget,clean_f_correct,clean_agree\n";
    for (const auto& r : records) {
        csv += std::to_string(r.at("node").get<int>()) + ",";
        csv += std::to_string(r.at("degree").get<int>()) + ",";
        csv += r.at("t_f").is_null() ? "" : std::to_string(r.at("t_f").get<int>());
        csv += ",";
        csv += r.at("t_g").is_null() ? "" : std::to_string(r.at("t_g").get<int>());
        csv += ",";
        csv += std::to_string(r.at("budget").get<int>()) + ",";
        csv += std::string(r.at("clean_f_correct").get<bool>() ? "1" : "0") + ",";
        csv += std::string(r.at("clean_agree").get<bool>() ? "1" : "0") + "\n";
    }
    return csv;
}

}  // namespace emitdetail

// Renders a result bundle into <out_dir>/<kind>/... as the requested subset
// of {csv, json, svg}. Re-running with an identical bundle reproduces every
// file byte for byte.
inline std::vector<std::filesystem::path> emit_results(const nlohmann::json& bundle,
                                                       const std::string& out_dir,
                                                       const std::vector<std::string>& formats) {
    std::string kind = bundle.at("kind").get<std::string>();
    std::filesystem::path root = std::filesystem::path(out_dir) / kind;
    std::set<std::string> want(formats.begin(), formats.end());
    for (const auto& f : want)
        if (f != "csv" && f != "json" && f != "svg") throw param_error("unknown output format: " + f);
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::filesystem::path& p, const std::string& content) {
        emitdetail::write_text_atomic(p, content);
        written.push_back(p);
    };

    if (want.count("json")) put(root / "bundle.json", bundle.dump(2) + "\n");

    if (kind == "bayes_table") {
        if (want.count("csv")) {
            std::string csv = "k,mode,mean,std,stderr,seeds\n";
            for (const auto& c : bundle.at("cells")) {
                csv += emitdetail::fmt(c.at("k").get<double>()) + "," + c.at("mode").get<std::string>() +
                       "," + emitdetail::fmt(c.at("mean").get<double>()) + "," +
                       emitdetail::fmt(c.at("std").get<double>()) + "," +
                       emitdetail::fmt(c.at("stderr").get<double>()) + "," +
                       std::to_string(c.at("per_seed").size()) + "\n";
            }
            put(root / "table.csv", csv);
        }
        if (want.count("svg")) {
            std::vector<double> ks;
            std::map<std::string, std::vector<double>> by_mode;
            for (const auto& c : bundle.at("cells")) {
                double k = c.at("k").get<double>();
                if (ks.empty() || ks.back() != k) ks.push_back(k);
                by_mode[c.at("mode").get<std::string>()].push_back(c.at("mean").get<double>());
            }
            std::vector<Series> series;
            for (auto& [mode, ys] : by_mode) series.push_back({mode, ys});
            put(root / "table.svg",
                render_line_chart("Reference accuracy", "K", "accuracy", ks, series));
        }
    } else if (kind == "violation_table") {
        if (want.count("csv")) {
            std::string csv = "k,budget,mean,std,stderr,seeds\n";
            for (const auto& c : bundle.at("cells")) {
                csv += emitdetail::fmt(c.at("k").get<double>()) + "," + c.at("budget").get<std::string>() +
                       "," + emitdetail::fmt(c.at("mean").get<double>()) + "," +
                       emitdetail::fmt(c.at("std").get<double>()) + "," +
                       emitdetail::fmt(c.at("stderr").get<double>()) + "," +
                       std::to_string(c.at("per_seed").size()) + "\n";
            }
            put(root / "table.csv", csv);
        }
        if (want.count("svg")) {
            std::vector<double> ks;
            std::map<std::string, std::vector<double>> by_budget;
            for (const auto& c : bundle.at("cells")) {
                double k = c.at("k").get<double>();
                if (ks.empty() || ks.back() != k) ks.push_back(k);
                by_budget[c.at("budget").get<std::string>()].push_back(c.at("mean").get<double>());
            }
            std::vector<Series> series;
            for (auto& [b, ys] : by_budget) series.push_back({b, ys});
            put(root / "table.svg",
                render_line_chart("Semantic violations (" + bundle.at("attack").get<std::string>() + ")",
                                  "K", "violated fraction", ks, series));
        }
    } else if (kind == "sweep") {
        if (want.count("csv")) {
            std::string csv =
                "k,seed,classifier,attack,r_fg,r_f,r_g,r_over,r_adv,f_beta,node_count,"
                "excluded_degree0,excluded_incorrect,excluded_disagree,censored_f,censored_g,"
                "test_accuracy\n";
            for (const auto& c : bundle.at("cells")) {
                const auto& s = c.at("summary");
                csv += emitdetail::fmt(c.at("k").get<double>()) + "," +
                       std::to_string(c.at("seed").get<int>()) + "," +
                       c.at("classifier").get<std::string>() + "," + c.at("attack").get<std::string>() +
                       "," + emitdetail::fmt(s.at("r_fg").get<double>()) + "," +
                       emitdetail::fmt(s.at("r_f").get<double>()) + "," +
                       emitdetail::fmt(s.at("r_g").get<double>()) + "," +
                       emitdetail::fmt_json_number(s.at("r_over")) + "," +
                       emitdetail::fmt_json_number(s.at("r_adv")) + "," +
                       emitdetail::fmt_json_number(s.at("f_beta")) + "," +
                       std::to_string(s.at("node_count").get<int>()) + "," +
                       std::to_string(s.at("excluded_degree0").get<int>()) + "," +
                       std::to_string(s.at("excluded_incorrect").get<int>()) + "," +
                       std::to_string(s.at("excluded_disagree").get<int>()) + "," +
                       std::to_string(s.at("censored_f").get<int>()) + "," +
                       std::to_string(s.at("censored_g").get<int>()) + "," +
                       emitdetail::fmt(c.at("test_accuracy").get<double>()) + "\n";
            }
            put(root / "summary.csv", csv);
            // One record file per cell: <K>/<classifier>/<attack>.seed<i>.csv
            for (const auto& c : bundle.at("cells")) {
                std::filesystem::path dir = root / ("K" + emitdetail::fmt(c.at("k").get<double>())) /
                                            c.at("classifier").get<std::string>();
                put(dir / (c.at("attack").get<std::string>() + ".seed" +
                           std::to_string(c.at("seed").get<int>()) + ".csv"),
                    emitdetail::records_csv(c.at("records")));
            }
            std::string grid = "k,classifier,attack,r_over_mean,r_over_std,r_over_stderr,"
                               "r_adv_mean,r_adv_std,r_adv_stderr,f_beta_mean,test_accuracy_mean\n";
            for (const auto& g : bundle.at("grid")) {
                auto cell = [&](const nlohmann::json& st, const char* field) -> std::string {
                    if (st.is_null()) return "nan";
                    return emitdetail::fmt(st.at(field).get<double>());
                };
                grid += emitdetail::fmt(g.at("k").get<double>()) + "," +
                        g.at("classifier").get<std::string>() + "," + g.at("attack").get<std::string>() +
                        "," + cell(g.at("r_over"), "mean") + "," + cell(g.at("r_over"), "std") + "," +
                        cell(g.at("r_over"), "stderr") + "," + cell(g.at("r_adv"), "mean") + "," +
                        cell(g.at("r_adv"), "std") + "," + cell(g.at("r_adv"), "stderr") + "," +
                        cell(g.at("f_beta"), "mean") + "," + cell(g.at("test_accuracy"), "mean") + "\n";
            }
            put(root / "grid.csv", grid);
        }
        if (want.count("svg")) {
            // One over-robustness line chart per attack, classifiers as series.
            std::set<std::string> attacks;
            for (const auto& g : bundle.at("grid")) attacks.insert(g.at("attack").get<std::string>());
            for (const auto& atk : attacks) {
                std::vector<double> ks;
                std::map<std::string, std::vector<double>> by_clf;
                for (const auto& g : bundle.at("grid")) {
                    if (g.at("attack").get<std::string>() != atk) continue;
                    double k = g.at("k").get<double>();
                    if (ks.empty() || ks.back() != k) ks.push_back(k);
                    by_clf[g.at("classifier").get<std::string>()].push_back(
                        g.at("r_over").is_null() ? 0.0 : g.at("r_over").at("mean").get<double>());
                }
                std::vector<Series> series;
                for (auto& [clf, ys] : by_clf) series.push_back({clf, ys});
                put(root / ("r_over." + atk + ".svg"),
                    render_line_chart("Over-robustness (" + atk + ")", "K", "R_over", ks, series));
            }
        }
    } else if (kind == "degree_profile") {
        if (want.count("csv")) {
            std::string csv =
                "degree,count,censored_min,censored_max,min_mean,min_q1,min_median,min_q3,"
                "max_mean,max_q1,max_median,max_q3\n";
            for (const auto& r : bundle.at("rows")) {
                auto quart = [&](const nlohmann::json& q, const char* field) -> std::string {
                    if (q.is_null()) return "nan";
                    return emitdetail::fmt(q.at(field).get<double>());
                };
                csv += std::to_string(r.at("degree").get<int>()) + "," +
                       std::to_string(r.at("count").get<int>()) + "," +
                       std::to_string(r.at("censored_min").get<int>()) + "," +
                       std::to_string(r.at("censored_max").get<int>()) + "," +
                       quart(r.at("min_class"), "mean") + "," + quart(r.at("min_class"), "q1") + "," +
                       quart(r.at("min_class"), "median") + "," + quart(r.at("min_class"), "q3") + "," +
                       quart(r.at("max_class"), "mean") + "," + quart(r.at("max_class"), "q1") + "," +
                       quart(r.at("max_class"), "median") + "," + quart(r.at("max_class"), "q3") + "\n";
            }
            put(root / "profile.csv", csv);
            std::string per = "node,degree,n_min,n_max\n";
            for (const auto& r : bundle.at("per_node")) {
                per += std::to_string(r.at("node").get<int>()) + "," +
                       std::to_string(r.at("degree").get<int>()) + ",";
                per += r.at("n_min").is_null() ? "" : std::to_string(r.at("n_min").get<int>());
                per += ",";
                per += r.at("n_max").is_null() ? "" : std::to_string(r.at("n_max").get<int>());
                per += "\n";
            }
            put(root / "per_node.csv", per);
        }
        if (want.count("svg")) {
            std::vector<BoxStats> boxes;
            for (const auto& r : bundle.at("rows")) {
                const auto& q = r.at("min_class");
                if (q.is_null()) continue;
                BoxStats b;
                b.label = std::to_string(r.at("degree").get<int>());
                b.q1 = q.at("q1").get<double>();
                b.median = q.at("median").get<double>();
                b.q3 = q.at("q3").get<double>();
                b.lo = b.q1;
                b.hi = b.q3;
                boxes.push_back(b);
            }
            if (!boxes.empty())
                put(root / "profile.svg",
                    render_box_chart("Degree-dependent robustness", "degree", "insertions to flip", boxes));
        }
    } else {
        throw param_error("emit: unknown bundle kind " + kind);
    }
    return written;
}

// Pinned reference windows for self-check mode. Only cells present in the
// bundle are examined; each violated window yields one message.
inline std::vector<std::string> check_expectations(const nlohmann::json& bundle) {
    std::vector<std::string> violations;
    std::string kind = bundle.at("kind").get<std::string>();
    auto near = [](double k, double want) { return std::abs(k - want) < 1e-9; };

    if (kind == "bayes_table") {
        struct Want {
            double k;
            const char* mode;
            double lo, hi;
        };
        const Want wants[] = {{0.1, "full", 0.877, 0.917},
                              {5.0, "full", 0.993, 1.0},
                              {5.0, "features_only", 0.986, 1.0}};
        for (const auto& c : bundle.at("cells")) {
            for (const auto& w : wants) {
                if (!near(c.at("k").get<double>(), w.k) || c.at("mode").get<std::string>() != w.mode)
                    continue;
                double m = c.at("mean").get<double>();
                if (m < w.lo || m > w.hi)
                    violations.push_back("bayes_table k=" + emitdetail::fmt(w.k) + " mode=" + w.mode +
                                         ": mean " + emitdetail::fmt(m) + " outside [" +
                                         emitdetail::fmt(w.lo) + ", " + emitdetail::fmt(w.hi) + "]");
            }
        }
    } else if (kind == "violation_table") {
        struct Want {
            double k;
            const char* budget;
            double lo, hi;
        };
        const Want wants[] = {{1.0, "b2", 0.232, 0.282}, {2.0, "b1", 0.029, 0.059},
                              {0.1, "deg+2", 0.99, 1.0}};
        for (const auto& c : bundle.at("cells")) {
            for (const auto& w : wants) {
                if (!near(c.at("k").get<double>(), w.k) || c.at("budget").get<std::string>() != w.budget)
                    continue;
                double m = c.at("mean").get<double>();
                if (m < w.lo || m > w.hi)
                    violations.push_back("violation_table k=" + emitdetail::fmt(w.k) + " budget=" +
                                         w.budget + ": mean " + emitdetail::fmt(m) + " outside [" +
                                         emitdetail::fmt(w.lo) + ", " + emitdetail::fmt(w.hi) + "]");
            }
        }
    } else if (kind == "sweep") {
        struct Want {
            const char* clf;
            double lo, hi;
        };
        const Want wants[] = {{"gcn", 0.243, 0.363}, {"gcn+lp", 0.149, 0.269}};
        for (const auto& g : bundle.at("grid")) {
            if (!near(g.at("k").get<double>(), 0.5)) continue;
            if (g.at("r_over").is_null()) continue;
            for (const auto& w : wants) {
                if (g.at("classifier").get<std::string>() != w.clf) continue;
                double m = g.at("r_over").at("mean").get<double>();
                if (m < w.lo || m > w.hi)
                    violations.push_back(std::string("sweep r_over k=0.5 ") + w.clf + ": mean " +
                                         emitdetail::fmt(m) + " outside [" + emitdetail::fmt(w.lo) +
                                         ", " + emitdetail::fmt(w.hi) + "]");
            }
        }
        // Per-seed ordering: combining with label propagation must not
        // increase over-robustness in any seed.
        std::map<std::pair<double, int>, double> gcn_over, gcnlp_over;
        for (const auto& c : bundle.at("cells")) {
            if (c.at("attack").get<std::string>() != "l2-weak") continue;
            if (c.at("summary").at("r_over").is_null()) continue;
            auto key = std::make_pair(c.at("k").get<double>(), c.at("seed").get<int>());
            double over = c.at("summary").at("r_over").get<double>();
            std::string clf = c.at("classifier").get<std::string>();
            if (clf == "gcn") gcn_over[key] = over;
            if (clf == "gcn+lp") gcnlp_over[key] = over;
        }
        for (const auto& [key, over_lp] : gcnlp_over) {
            auto it = gcn_over.find(key);
            if (it == gcn_over.end() || !near(key.first, 0.5)) continue;
            if (over_lp >= it->second)
                violations.push_back("sweep k=0.5 seed=" + std::to_string(key.second) +
                                     ": r_over(gcn+lp)=" + emitdetail::fmt(over_lp) +
                                     " not below r_over(gcn)=" + emitdetail::fmt(it->second));
        }
    }
    return violations;
}

}  // namespace semrob

#include "rm/case_io.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "rm/errors.hpp"

namespace rm::cli {

using nlohmann::json;

namespace {

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void check_keys(const json& obj, const std::set<std::string>& known, const std::string& where,
                const LoadOptions& opts, LoadDiagnostics* diag,
                std::vector<std::string>& errors) {
    if (!obj.is_object()) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (known.count(it.key())) continue;
        const std::string msg = where + ": unknown key '" + it.key() + "'";
        if (opts.strict) errors.push_back(msg);
        else if (diag) diag->warnings.push_back(msg);
    }
}

std::array<double, 24> profile_from(const json& j, const std::string& where) {
    std::array<double, 24> p{};
    if (!j.is_array() || j.size() != 24)
        throw ValidationError({where + ": profile must have exactly 24 entries"});
    for (int h = 0; h < 24; ++h) p[static_cast<size_t>(h)] = j[static_cast<size_t>(h)].get<double>();
    return p;
}

std::optional<WeibullLife> life_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    WeibullLife w;
    w.nu = j.value("nu", 0.0);
    w.alpha = j.value("alpha", 1.0);
    w.gamma = j.value("gamma", 0.0);
    w.shape = j.value("shape", 1.0);
    return w;
}

} // namespace

grid::GridCase load_case(const std::string& path, const LoadOptions& opts, LoadDiagnostics* diag) {
    const json j = parse_file(path);
    std::vector<std::string> errors;
    check_keys(j,
               {"buses", "lines", "generators", "loads", "wind", "voll", "wind_curtail_cost",
                "reference_bus"},
               path, opts, diag, errors);

    grid::GridCase c;
    try {
        c.buses = j.at("buses").get<std::vector<int>>();
        c.voll = j.at("voll").get<double>();
        c.wind_curtail_cost = j.value("wind_curtail_cost", 0.0);
        c.reference_bus = j.at("reference_bus").get<int>();

        for (const auto& lj : j.value("lines", json::array())) {
            check_keys(lj,
                       {"id", "from", "to", "susceptance", "rating", "life", "maintenance_cost",
                        "age_hours"},
                       path + ": line", opts, diag, errors);
            grid::Line l;
            l.id = lj.at("id").get<std::string>();
            l.from_bus = lj.at("from").get<int>();
            l.to_bus = lj.at("to").get<int>();
            l.susceptance = lj.at("susceptance").get<double>();
            l.rating = lj.at("rating").get<double>();
            l.life = life_from(lj.value("life", json()));
            l.maintenance_cost = lj.value("maintenance_cost", 0.0);
            l.initial_age_hours = lj.value("age_hours", 0.0);
            c.lines.push_back(std::move(l));
        }
        for (const auto& gj : j.value("generators", json::array())) {
            check_keys(gj,
                       {"id", "bus", "pmin", "pmax", "cost", "startup_cost", "min_up", "min_down"},
                       path + ": generator", opts, diag, errors);
            grid::Generator g;
            g.id = gj.at("id").get<std::string>();
            g.bus = gj.at("bus").get<int>();
            g.pmin = gj.value("pmin", 0.0);
            g.pmax = gj.at("pmax").get<double>();
            g.cost_linear = gj.at("cost").get<double>();
            g.startup_cost = gj.value("startup_cost", 0.0);
            g.min_up = gj.value("min_up", 1);
            g.min_down = gj.value("min_down", 1);
            c.generators.push_back(std::move(g));
        }
        for (const auto& dj : j.value("loads", json::array())) {
            check_keys(dj, {"id", "bus", "peak_mw", "profile"}, path + ": load", opts, diag,
                       errors);
            grid::Load d;
            d.id = dj.at("id").get<std::string>();
            d.bus = dj.at("bus").get<int>();
            d.peak_mw = dj.at("peak_mw").get<double>();
            d.profile = dj.contains("profile") ? profile_from(dj.at("profile"), "load " + d.id)
                                               : [] {
                                                     std::array<double, 24> p{};
                                                     p.fill(1.0);
                                                     return p;
                                                 }();
            c.loads.push_back(std::move(d));
        }
        for (const auto& wj : j.value("wind", json::array())) {
            check_keys(wj, {"id", "bus", "capacity_mw", "profile", "sigma_fraction"},
                       path + ": wind", opts, diag, errors);
            grid::WindUnit w;
            w.id = wj.at("id").get<std::string>();
            w.bus = wj.at("bus").get<int>();
            w.capacity_mw = wj.at("capacity_mw").get<double>();
            w.profile = wj.contains("profile") ? profile_from(wj.at("profile"), "wind " + w.id)
                                               : [] {
                                                     std::array<double, 24> p{};
                                                     p.fill(0.5);
                                                     return p;
                                                 }();
            w.sigma_fraction = wj.value("sigma_fraction", 0.15);
            c.wind_units.push_back(std::move(w));
        }
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }

    auto problems = c.validate();
    problems.insert(problems.end(), errors.begin(), errors.end());
    if (!problems.empty()) throw ValidationError(problems);
    return c;
}

lt::RobustLtInstance load_lt_instance(const std::string& path, const LoadOptions& opts,
                                      LoadDiagnostics* diag) {
    const json j = parse_file(path);
    std::vector<std::string> errors;
    check_keys(j, {"generators", "loads", "interconnections", "big_m"}, path, opts, diag, errors);

    lt::RobustLtInstance in;
    try {
        in.big_m = j.value("big_m", 1e4);
        for (const auto& gj : j.value("generators", json::array())) {
            check_keys(gj, {"id", "area", "cost", "pmin", "pmax"}, path + ": generator", opts,
                       diag, errors);
            lt::LtGenerator g;
            g.id = gj.at("id").get<std::string>();
            g.area = gj.value("area", 1);
            g.cost_min = gj.at("cost").at(0).get<double>();
            g.cost_max = gj.at("cost").at(1).get<double>();
            g.p_min = gj.value("pmin", 0.0);
            g.p_max = gj.at("pmax").get<double>();
            in.generators.push_back(std::move(g));
        }
        for (const auto& lj : j.value("loads", json::array())) {
            check_keys(lj, {"id", "area", "worth", "lmin", "lmax"}, path + ": load", opts, diag,
                       errors);
            lt::LtLoad l;
            l.id = lj.at("id").get<std::string>();
            l.area = lj.value("area", 1);
            l.worth_min = lj.at("worth").at(0).get<double>();
            l.worth_max = lj.at("worth").at(1).get<double>();
            l.l_min = lj.value("lmin", 0.0);
            l.l_max = lj.at("lmax").get<double>();
            in.loads.push_back(std::move(l));
        }
        for (const auto& ij : j.value("interconnections", json::array())) {
            check_keys(ij,
                       {"id", "from_area", "to_area", "existing", "invest_min", "invest_max",
                        "invest_cost"},
                       path + ": interconnection", opts, diag, errors);
            lt::Interconnection ic;
            ic.id = ij.at("id").get<std::string>();
            ic.from_area = ij.value("from_area", 1);
            ic.to_area = ij.value("to_area", 2);
            ic.existing_capacity = ij.value("existing", 0.0);
            ic.invest_min = ij.value("invest_min", 0.0);
            ic.invest_max = ij.at("invest_max").get<double>();
            ic.invest_cost = ij.at("invest_cost").get<double>();
            in.interconnections.push_back(std::move(ic));
        }
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    auto problems = in.validate();
    problems.insert(problems.end(), errors.begin(), errors.end());
    if (!problems.empty()) throw ValidationError(problems);
    return in;
}

st::ScenarioTree load_tree(const std::string& path) {
    const json j = parse_file(path);
    st::ScenarioTree tree;
    try {
        for (const auto& nj : j.at("nodes")) {
            st::TreeNode n;
            n.id = static_cast<int>(tree.nodes.size());
            n.stage = nj.at("stage").get<int>();
            n.parent = nj.value("parent", -1);
            n.cond_prob = nj.value("prob", 1.0);
            if (nj.contains("xi")) {
                n.xi.load_scale = nj.at("xi").value("load", 1.0);
                n.xi.wind_scale = nj.at("xi").value("wind", 1.0);
                n.xi.fail_mult = nj.at("xi").value("fail", 1.0);
            }
            if (n.parent >= 0 && n.parent < static_cast<int>(tree.nodes.size()))
                tree.nodes[static_cast<size_t>(n.parent)].children.push_back(n.id);
            tree.nodes.push_back(std::move(n));
        }
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    const auto problems = tree.validate();
    if (!problems.empty()) throw ValidationError(problems);
    return tree;
}

lt::ProjectPlan load_projects(const std::string& path) {
    const json j = parse_file(path);
    lt::ProjectPlan plan;
    try {
        plan.budget = j.value("budget", -1.0);
        for (const auto& pj : j.at("projects")) {
            lt::Project p;
            p.id = pj.at("id").get<std::string>();
            p.construction_cost = pj.at("cost").get<double>();
            p.duration_months = pj.value("duration_months", 0);
            p.opex_per_year = pj.value("opex_per_year", 0.0);
            p.opex_slope_per_year = pj.value("opex_slope_per_year", 0.0);
            for (const auto& lj : pj.value("lines", json::array())) {
                grid::Line l;
                l.id = lj.at("id").get<std::string>();
                l.from_bus = lj.at("from").get<int>();
                l.to_bus = lj.at("to").get<int>();
                l.susceptance = lj.at("susceptance").get<double>();
                l.rating = lj.at("rating").get<double>();
                l.maintenance_cost = lj.value("maintenance_cost", 0.0);
                p.new_lines.push_back(std::move(l));
            }
            plan.projects.emplace_back(std::move(p), pj.at("start_month").get<int>());
        }
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return plan;
}

std::vector<st::PlanningDecision> load_candidates(const std::string& path,
                                                  const grid::GridCase& c) {
    const json j = parse_file(path);
    std::vector<st::PlanningDecision> out;
    try {
        for (const auto& cj : j.at("candidates")) {
            st::PlanningDecision d;
            d.reserve_margin_mw = cj.value("reserve_margin_mw", 0.0);
            d.direct_cost = cj.value("direct_cost", 0.0);
            for (const auto& pat : cj.at("commitment")) {
                std::array<std::uint8_t, 24> hours{};
                if (pat.is_array()) {
                    for (int h = 0; h < 24; ++h)
                        hours[static_cast<size_t>(h)] =
                            pat[static_cast<size_t>(h)].get<int>() ? 1 : 0;
                } else {
                    hours.fill(pat.get<int>() ? 1 : 0);
                }
                d.commitment.push_back(hours);
            }
            const auto problems = d.validate(c);
            if (!problems.empty()) throw ValidationError(problems);
            out.push_back(std::move(d));
        }
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return out;
}

std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char ch;
    while (in.get(ch)) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

rt::ContingencyModel load_contingencies(const std::string& selector, const grid::GridCase& c,
                                        double default_line_prob) {
    if (selector == "nminus1") return rt::n_minus_1_universe(c, default_line_prob);
    if (selector.rfind("nminus2:", 0) == 0) {
        const int k = std::stoi(selector.substr(8));
        return rt::n_minus_2_universe(c, k, default_line_prob);
    }
    if (selector.rfind("file:", 0) == 0) {
        const json j = parse_file(selector.substr(5));
        rt::ContingencyModel m;
        for (const auto& ej : j.at("events")) {
            rt::Contingency e;
            e.id = ej.at("id").get<int>();
            e.probability = ej.at("probability").get<double>();
            e.line_out_mask.assign(c.lines.size(), 0);
            for (const auto& lid : ej.value("lines_out", json::array())) {
                const std::string id = lid.get<std::string>();
                for (size_t li = 0; li < c.lines.size(); ++li)
                    if (c.lines[li].id == id) e.line_out_mask[li] = 1;
            }
            m.events.push_back(std::move(e));
        }
        const auto problems = m.validate(c.num_lines());
        if (!problems.empty()) throw ValidationError(problems);
        return m;
    }
    throw ValidationError({"unknown contingency selector '" + selector + "'"});
}

} // namespace rm::cli

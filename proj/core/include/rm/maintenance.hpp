#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rm {

/// Binary month x line action matrix. Feasibility h(u): at most
/// `per_month_cap` actions in any month and `per_line_cap` actions per line
/// over the horizon.
struct MaintenanceSchedule {
    int months = 0;
    int num_lines = 0;
    std::vector<std::uint8_t> actions; // row-major [month][line]

    static MaintenanceSchedule empty(int months, int num_lines) {
        return MaintenanceSchedule{months, num_lines,
                                   std::vector<std::uint8_t>(
                                       static_cast<size_t>(months) * num_lines, 0)};
    }

    bool at(int month, int line) const {
        return actions[static_cast<size_t>(month) * num_lines + line] != 0;
    }
    void set(int month, int line, bool v) {
        actions[static_cast<size_t>(month) * num_lines + line] = v ? 1 : 0;
    }
    int action_count() const {
        int n = 0;
        for (auto a : actions) n += a != 0;
        return n;
    }

    std::vector<std::string> validate(int per_month_cap = 1, int per_line_cap = 1) const;
};

inline std::vector<std::string> MaintenanceSchedule::validate(int per_month_cap,
                                                              int per_line_cap) const {
    std::vector<std::string> v;
    if (static_cast<int>(actions.size()) != months * num_lines) {
        v.push_back("action matrix shape mismatch");
        return v;
    }
    for (int m = 0; m < months; ++m) {
        int n = 0;
        for (int l = 0; l < num_lines; ++l) n += at(m, l);
        if (n > per_month_cap)
            v.push_back("month " + std::to_string(m) + " schedules " + std::to_string(n) +
                        " actions, cap is " + std::to_string(per_month_cap));
    }
    for (int l = 0; l < num_lines; ++l) {
        int n = 0;
        for (int m = 0; m < months; ++m) n += at(m, l);
        if (n > per_line_cap)
            v.push_back("line " + std::to_string(l) + " scheduled " + std::to_string(n) +
                        " times, cap is " + std::to_string(per_line_cap));
    }
    return v;
}

} // namespace rm

#pragma once

#include <array>

#include "rm/grid.hpp"
#include "rm/lt.hpp"

namespace fixtures {

inline std::array<double, 24> flat(double v) {
    std::array<double, 24> p{};
    p.fill(v);
    return p;
}

inline std::array<double, 24> daily_load_shape() {
    // mild morning/evening double peak
    std::array<double, 24> p{};
    const double base[24] = {0.62, 0.58, 0.56, 0.55, 0.56, 0.60, 0.68, 0.78,
                             0.85, 0.88, 0.90, 0.92, 0.91, 0.90, 0.89, 0.90,
                             0.93, 0.98, 1.00, 0.98, 0.92, 0.84, 0.74, 0.66};
    for (int h = 0; h < 24; ++h) p[static_cast<size_t>(h)] = base[h];
    return p;
}

inline std::array<double, 24> daily_wind_shape() {
    std::array<double, 24> p{};
    const double base[24] = {0.55, 0.58, 0.60, 0.62, 0.60, 0.55, 0.48, 0.40,
                             0.35, 0.32, 0.30, 0.28, 0.27, 0.28, 0.30, 0.33,
                             0.38, 0.42, 0.46, 0.50, 0.52, 0.54, 0.55, 0.55};
    for (int h = 0; h < 24; ++h) p[static_cast<size_t>(h)] = base[h];
    return p;
}

/// Two buses, one line; the smallest possible network.
inline rm::grid::GridCase bus2() {
    rm::grid::GridCase c;
    c.buses = {1, 2};
    c.reference_bus = 1;
    c.voll = 1000.0;
    c.wind_curtail_cost = 100.0;
    c.lines.push_back({"L12", 1, 2, 10.0, 100.0, std::nullopt, 5000.0, 0.0});
    c.generators.push_back({"G1", 1, 0.0, 100.0, 10.0, 100.0, 1, 1});
    c.loads.push_back({"D2", 2, 50.0, flat(1.0)});
    return c;
}

/// Three-bus triangle: cheap unit at bus 1, dear unit at bus 3, load at bus 2.
/// Any single line outage is survivable by redispatch; double outages that
/// island bus 2 shed the full load.
inline rm::grid::GridCase bus3() {
    rm::grid::GridCase c;
    c.buses = {1, 2, 3};
    c.reference_bus = 1;
    c.voll = 1000.0;
    c.wind_curtail_cost = 100.0;
    c.lines.push_back({"L12", 1, 2, 10.0, 100.0, std::nullopt, 5000.0, 0.0});
    c.lines.push_back({"L23", 2, 3, 10.0, 100.0, std::nullopt, 5000.0, 0.0});
    c.lines.push_back({"L13", 1, 3, 10.0, 60.0, std::nullopt, 5000.0, 0.0});
    c.generators.push_back({"G1", 1, 0.0, 120.0, 10.0, 100.0, 1, 1});
    c.generators.push_back({"G3", 3, 0.0, 100.0, 30.0, 100.0, 1, 1});
    c.loads.push_back({"D2", 2, 90.0, flat(1.0)});
    return c;
}

/// Five-bus system in the PJM style: five thermal units of mixed flexibility,
/// two wind farms, three loads. Line ages and the exponential-Weibull life
/// model make the older lines markedly failure-prone, which is what the
/// maintenance machinery exercises.
inline rm::grid::GridCase bus5(bool with_life = true) {
    rm::grid::GridCase c;
    c.buses = {1, 2, 3, 4, 5};
    c.reference_bus = 1;
    c.voll = 1000.0;
    c.wind_curtail_cost = 100.0;

    const rm::WeibullLife life{1.0e-3, 1.0, 5.0e-4, 1.0};
    auto line = [&](const char* id, int f, int t, double b, double rating, double age) {
        rm::grid::Line l;
        l.id = id;
        l.from_bus = f;
        l.to_bus = t;
        l.susceptance = b;
        l.rating = rating;
        if (with_life) l.life = life;
        l.maintenance_cost = 5000.0;
        l.initial_age_hours = age;
        return l;
    };
    c.lines.push_back(line("L1", 1, 2, 35.6, 400.0, 16000.0));
    c.lines.push_back(line("L2", 1, 4, 32.9, 300.0, 2000.0));
    c.lines.push_back(line("L3", 1, 5, 156.0, 300.0, 4000.0));
    c.lines.push_back(line("L4", 2, 3, 92.6, 300.0, 1000.0));
    c.lines.push_back(line("L5", 3, 4, 33.7, 300.0, 8000.0));
    c.lines.push_back(line("L6", 4, 5, 33.7, 240.0, 12000.0));

    c.generators.push_back({"U1", 1, 0.0, 110.0, 14.0, 100.0, 1, 1});
    c.generators.push_back({"U2", 1, 0.0, 100.0, 15.0, 200.0, 2, 2});
    c.generators.push_back({"U3", 3, 50.0, 520.0, 30.0, 500.0, 3, 3});
    c.generators.push_back({"U4", 4, 0.0, 200.0, 40.0, 100.0, 1, 1});
    c.generators.push_back({"U5", 5, 150.0, 600.0, 10.0, 4000.0, 8, 8});

    c.loads.push_back({"D2", 2, 300.0, daily_load_shape()});
    c.loads.push_back({"D3", 3, 300.0, daily_load_shape()});
    c.loads.push_back({"D4", 4, 300.0, daily_load_shape()});

    c.wind_units.push_back({"W1", 1, 150.0, daily_wind_shape(), 0.15});
    c.wind_units.push_back({"W2", 2, 100.0, daily_wind_shape(), 0.15});
    return c;
}

/// The two-area robust investment instance with interval prices.
inline rm::lt::RobustLtInstance lt_appendix() {
    rm::lt::RobustLtInstance in;
    in.big_m = 10000.0;
    auto gen = [&](const char* id, int area, double cmin, double cmax) {
        in.generators.push_back({id, area, cmin, cmax, 0.0, 4.0});
    };
    auto load = [&](const char* id, int area, double wmin, double wmax) {
        in.loads.push_back({id, area, wmin, wmax, 0.0, 3.0});
    };
    gen("g1", 1, 160, 190);
    gen("g2", 1, 300, 380);
    gen("g3", 1, 80, 120);
    gen("g4", 2, 220, 300);
    gen("g5", 2, 230, 300);
    gen("g6", 2, 500, 600);
    load("l1", 1, 290, 390);
    load("l2", 1, 260, 300);
    load("l3", 1, 500, 1000);
    load("l4", 1, 150, 250);
    load("l5", 2, 300, 400);
    load("l6", 2, 100, 150);
    load("l7", 2, 100, 300);
    load("l8", 2, 100, 400);
    in.interconnections.push_back({"i1", 1, 2, 0.0, 0.0, 4.0, 30.0});
    return in;
}

} // namespace fixtures

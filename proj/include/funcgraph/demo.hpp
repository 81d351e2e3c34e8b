#pragma once

#include <cstdint>
#include <string>

namespace funcgraph::demo {

/// Knobs of the bundled synthetic design-repository generator. The
/// generator emits the 12-column export CSV; graphs get a skewed size
/// distribution, a component hierarchy for assembly edges, and flow
/// chains whose terms encode each data point's functional role.
///
/// Labels are role-driven with configurable noise and missing rates:
/// component basis narrows the role down, edge flow terms disambiguate
/// it, assembly links are independent of roles (pure topology).
struct DemoSpec {
    std::uint64_t seed = 1;
    std::size_t n_graphs = 36;
    std::size_t total_nodes = 800; // exact corpus total
    double flow_per_node = 2.2;    // stored flow edges per node (corpus target)
    double assembly_per_node = 1.1;
    double size_sigma = 0.45; // lognormal spread of graph sizes
    std::size_t min_nodes = 3;

    std::size_t n_parts = 8;    // component basis terms
    std::size_t n_families = 8; // product families (system names)
    double t1_noise = 0.025;
    double t2_noise = 0.02;
    double t3_noise = 0.015;
    double t2_missing = 0.03;
    double t3_missing = 0.06;
    double material_noise = 0.25;
};

/// Small learnable corpus for training experiments.
DemoSpec small_preset(std::uint64_t seed = 1);

/// Repository-scale corpus for ingestion statistics: 160 graphs,
/// 15,636 data points, ~790.7 stored edges per graph of which ~30.8%
/// are assembly links.
DemoSpec large_preset(std::uint64_t seed = 2);

std::string generate_csv(const DemoSpec& spec);

} // namespace funcgraph::demo

// Minimize the integer Rastrigin function on {1..10}^30, serially and with four
// in-process workers, and show that both runs land on the same point.

#include <cstdio>

#include "bpb/bpb.hpp"

int main()
{
    bpb::ObjectiveSpec objective;
    objective.kind = bpb::ObjectiveKind::rastrigin;
    objective.space = bpb::SpaceSpec(30, 10);
    objective.rastrigin_k = 2;

    bpb::SearchConfig search;
    search.space = objective.space;
    search.sample_size = 150;
    search.initial_radius = 15;
    search.seed = 42;

    for (int workers : {0, 4}) {
        bpb::EngineConfig engine;
        engine.workers = workers;
        const auto r = bpb::run(search, objective, engine, [](const bpb::IterationTrace& t) {
            if (!t.partition.regions.empty())
                std::printf("  iteration %llu: radius %d, %zu regions, best %g\n",
                            static_cast<unsigned long long>(t.iteration), t.radius, t.partition.regions.size(),
                            t.best_value);
        });
        std::printf("p=%d: best %g at (%s), %s after %llu points\n", workers, r.best_value,
                    r.best_point.to_string().c_str(), std::string(bpb::to_string(r.stop_reason)).c_str(),
                    static_cast<unsigned long long>(r.evaluations));
    }
}

#include "fhm/typology.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "fhm/stats.hpp"

namespace fhm {

std::string to_string(SizeClass s) {
    switch (s) {
        case SizeClass::petite: return "petite";
        case SizeClass::moyenne: return "moyenne";
        case SizeClass::grande: return "grande";
    }
    return "?";
}

std::string to_string(Specialization s) {
    switch (s) {
        case Specialization::vivrier: return "vivrier";
        case Specialization::rente: return "rente";
        case Specialization::cereales_legumineuses: return "cereales_legumineuses";
        case Specialization::mixte: return "mixte";
    }
    return "?";
}

namespace {

constexpr int kVars = 5;

}  // namespace

PracticeClassification classify_practices(const std::vector<PracticeObservation>& observations,
                                          int n_clusters) {
    PracticeClassification out;
    const int n = static_cast<int>(observations.size());
    if (n < n_clusters)
        throw std::invalid_argument("classify_practices: fewer observations than clusters");

    // canonical order makes the whole procedure permutation-invariant
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return observations[a].plot_id < observations[b].plot_id;
    });

    std::vector<std::array<double, kVars>> pts(n);
    for (int i = 0; i < n; ++i) {
        const auto& o = observations[order[i]];
        pts[i] = {o.seed, o.fertilizer, o.phyto, o.equipment, o.hired_labor};
    }
    // z-score per variable; zero-variance dimensions drop out
    for (int v = 0; v < kVars; ++v) {
        std::vector<double> col(n);
        for (int i = 0; i < n; ++i) col[i] = pts[i][v];
        double m = stats::mean(col);
        double sd = stats::stddev(col);
        for (int i = 0; i < n; ++i) pts[i][v] = sd > 0 ? (pts[i][v] - m) / sd : 0.0;
    }

    // Ward agglomeration via nearest-neighbor chain on cluster centroids:
    // d(a,b) = na*nb/(na+nb) * ||mu_a - mu_b||^2
    struct Node {
        bool active = true;
        int count = 1;
        std::array<double, kVars> mu{};
        int min_plot = 0;  // index in canonical order, for tie-breaking
    };
    std::vector<Node> nodes(n);
    for (int i = 0; i < n; ++i) {
        nodes[i].mu = pts[i];
        nodes[i].min_plot = i;
    }
    auto ward = [&](int a, int b) {
        double d2 = 0;
        for (int v = 0; v < kVars; ++v) {
            double diff = nodes[a].mu[v] - nodes[b].mu[v];
            d2 += diff * diff;
        }
        double na = nodes[a].count, nb = nodes[b].count;
        return na * nb / (na + nb) * d2;
    };

    struct Merge {
        int a, b;
        double height;
        int seq;
    };
    std::vector<Merge> merges;
    std::vector<int> chain;
    std::vector<int> alive;
    for (int i = 0; i < n; ++i) alive.push_back(i);
    int n_alive = n;
    while (n_alive > 1) {
        if (chain.empty()) {
            for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
                if (nodes[i].active) {
                    chain.push_back(i);
                    break;
                }
        }
        int top = chain.back();
        int nn = -1;
        double best = 0;
        for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
            if (!nodes[i].active || i == top) continue;
            double d = ward(top, i);
            if (nn < 0 || d < best || (d == best && nodes[i].min_plot < nodes[nn].min_plot)) {
                nn = i;
                best = d;
            }
        }
        if (chain.size() >= 2 && nn == chain[chain.size() - 2]) {
            chain.pop_back();
            chain.pop_back();
            int a = std::min(top, nn), b = std::max(top, nn);
            merges.push_back({a, b, best, static_cast<int>(merges.size())});
            // merge b into a new node appended at the end
            Node merged;
            merged.count = nodes[a].count + nodes[b].count;
            for (int v = 0; v < kVars; ++v)
                merged.mu[v] = (nodes[a].mu[v] * nodes[a].count + nodes[b].mu[v] * nodes[b].count) /
                               merged.count;
            merged.min_plot = std::min(nodes[a].min_plot, nodes[b].min_plot);
            nodes[a].active = false;
            nodes[b].active = false;
            nodes.push_back(merged);
            --n_alive;
        } else {
            chain.push_back(nn);
        }
    }

    // cut the dendrogram: apply merges in height order until n_clusters remain
    std::sort(merges.begin(), merges.end(), [](const Merge& x, const Merge& y) {
        return x.height != y.height ? x.height < y.height : x.seq < y.seq;
    });
    std::vector<int> parent(nodes.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    int remaining = n;
    std::size_t applied = 0;
    while (remaining > n_clusters && applied < merges.size()) {
        const auto& m = merges[applied++];
        int ra = find(m.a), rb = find(m.b);
        if (ra != rb) {
            parent[std::max(ra, rb)] = std::min(ra, rb);
            --remaining;
        }
    }
    // a ~zero height for the merge that would collapse the requested clusters
    // means there is no real separation left
    bool degenerate = applied < merges.size() && merges[applied].height <= 1e-12;

    std::map<int, std::vector<int>> groups;  // root -> member indices (canonical order)
    for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);

    if (degenerate || static_cast<int>(groups.size()) < n_clusters) {
        for (int i = 0; i < n; ++i) out.labels[observations[order[i]].plot_id] = Practice::extensive;
        out.diagnostics.push_back({"classify_practices", "clusters not separable; all labeled extensive"});
        return out;
    }

    // lower mean total expenditure -> extensive
    std::vector<std::pair<double, int>> totals;  // (mean raw total, root)
    for (const auto& [root, members] : groups) {
        double t = 0;
        for (int i : members) t += observations[order[i]].total();
        totals.push_back({t / static_cast<double>(members.size()), root});
    }
    std::sort(totals.begin(), totals.end());
    std::map<int, Practice> label_for_root;
    for (std::size_t k = 0; k < totals.size(); ++k)
        label_for_root[totals[k].second] = k == 0 ? Practice::extensive : Practice::semi_intensive;

    for (int i = 0; i < n; ++i)
        out.labels[observations[order[i]].plot_id] = label_for_root[find(i)];
    return out;
}

std::map<ProductCategory, double> category_value_shares(const Household& household,
                                                        const ModelInstance& model) {
    std::map<ProductCategory, double> value;
    double total = 0;
    for (const auto& [aid, ha] : household.observed_levels) {
        const Activity* a = model.find_activity(aid);
        if (!a) continue;
        const Product* p = model.find_product(a->product);
        if (!p) continue;
        double v = ha * a->yield_kg_ha * model.prices.market(p->id);
        value[p->category] += v;
        total += v;
    }
    if (total > 0)
        for (auto& [cat, v] : value) v /= total;
    return value;
}

FarmClass economic_size(const Household& household, const ModelInstance& model) {
    FarmClass fc;
    double total = 0;
    for (const auto& [aid, ha] : household.observed_levels) {
        const Activity* a = model.find_activity(aid);
        if (!a) continue;
        total += ha * a->yield_kg_ha * model.prices.market(a->product);
    }
    fc.economic_value = total;
    if (total < 400000.0)
        fc.size = SizeClass::petite;
    else if (total <= 850000.0)
        fc.size = SizeClass::moyenne;
    else
        fc.size = SizeClass::grande;
    return fc;
}

Specialization specialization(const Household& household, const ModelInstance& model) {
    auto shares = category_value_shares(household, model);
    double total = 0;
    for (const auto& [cat, s] : shares) total += s;
    if (total <= 0) throw std::invalid_argument("specialization: zero total economic value");
    auto share = [&](ProductCategory c) {
        auto it = shares.find(c);
        return it == shares.end() ? 0.0 : it->second;
    };
    double vivrier = share(ProductCategory::cereal) + share(ProductCategory::root_tuber);
    double rente = share(ProductCategory::legume) + share(ProductCategory::cash_horticulture) +
                   share(ProductCategory::cash_other);
    double cer_leg = share(ProductCategory::cereal) + share(ProductCategory::legume);
    if (vivrier >= 0.65) return Specialization::vivrier;
    if (rente >= 0.65) return Specialization::rente;
    if (cer_leg >= 0.65) return Specialization::cereales_legumineuses;
    return Specialization::mixte;
}

FarmClass classify_farm(const Household& household, const ModelInstance& model) {
    FarmClass fc = economic_size(household, model);
    fc.specialization =
        fc.economic_value > 0 ? specialization(household, model) : Specialization::mixte;
    return fc;
}

}  // namespace fhm

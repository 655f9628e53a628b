#include "fcald/dn_access.hpp"

#include <algorithm>

namespace fcald {

LiveDnAccess::LiveDnAccess(NonlinearitySpec spec, GridSpec g, ForwardOptions opts)
    : spec_(std::move(spec)), grid_(g), opts_(opts),
      harmonic_(std::make_shared<PoissonSolver>(grid_)) {}

BoundaryFunction LiveDnAccess::apply(const BoundaryFunction& f) {
    return dn_apply(spec_, grid_, f, opts_, harmonic_.get());
}

uint64_t DatasetDnAccess::key_of(const BoundaryFunction& f) {
    uint64_t h = fnv1a(f.values.data(), f.values.size() * sizeof(double));
    if (f.mask) {
        const auto& p = f.mask->positions;
        h ^= fnv1a(p.data(), p.size() * sizeof(int));
    }
    return h;
}

DatasetDnAccess::DatasetDnAccess(DNDataset ds, GridSpec g) : ds_(std::move(ds)), grid_(g) {
    for (int i = 0; i < static_cast<int>(ds_.records.size()); ++i)
        index_.emplace(key_of(ds_.records[i].f), i);
}

BoundaryFunction DatasetDnAccess::apply(const BoundaryFunction& f) {
    auto it = index_.find(key_of(f));
    if (it == index_.end())
        throw ConfigError("DatasetDnAccess: no record for the requested boundary data "
                          "(exact match required; regenerate the dataset for this config)");
    const DNRecord& rec = ds_.records[it->second];
    if (rec.f.values != f.values)
        throw ConfigError("DatasetDnAccess: record collision; regenerate the dataset");
    return rec.df;
}

RecordingDnAccess::RecordingDnAccess(DnAccess& inner) : inner_(inner) {}

BoundaryFunction RecordingDnAccess::apply(const BoundaryFunction& f) {
    const uint64_t key = DatasetDnAccess::key_of(f);
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = seen_.find(key);
        if (it != seen_.end()) return records_[it->second].df;
    }
    BoundaryFunction df = inner_.apply(f);
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, fresh] = seen_.emplace(key, static_cast<int>(records_.size()));
    if (fresh) records_.push_back({f, df});
    return df;
}

DNDataset RecordingDnAccess::dataset(uint64_t grid_fp, uint64_t spec_fp) {
    std::lock_guard<std::mutex> lock(mu_);
    DNDataset ds;
    ds.grid_fp = grid_fp;
    ds.spec_fp = spec_fp;
    ds.records = records_;
    // canonical order: request order depends on worker scheduling, the
    // persisted dataset must not
    std::sort(ds.records.begin(), ds.records.end(), [](const DNRecord& a, const DNRecord& b) {
        if (a.f.values != b.f.values) return a.f.values < b.f.values;
        const auto ma = a.f.mask ? a.f.mask->positions : std::vector<int>{};
        const auto mb = b.f.mask ? b.f.mask->positions : std::vector<int>{};
        return ma < mb;
    });
    return ds;
}

}  // namespace fcald

#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>

#include "fcald/dn_map.hpp"

namespace fcald {

/// Measurement firewall: reconstruction consumes boundary data through this
/// surface only and never sees the potential behind it.
class DnAccess {
public:
    virtual ~DnAccess() = default;
    virtual const GridSpec& grid() const = 0;
    virtual BoundaryFunction apply(const BoundaryFunction& f) = 0;
};

/// Solver-backed oracle (the synthetic measurement device).
class LiveDnAccess : public DnAccess {
public:
    LiveDnAccess(NonlinearitySpec spec, GridSpec g, ForwardOptions opts);
    const GridSpec& grid() const override { return grid_; }
    BoundaryFunction apply(const BoundaryFunction& f) override;

private:
    NonlinearitySpec spec_;
    GridSpec grid_;
    ForwardOptions opts_;
    std::shared_ptr<PoissonSolver> harmonic_;
};

/// Replays a persisted dataset; refuses anything but an exact input match
/// (no interpolation between measured records).
class DatasetDnAccess : public DnAccess {
public:
    DatasetDnAccess(DNDataset ds, GridSpec g);
    const GridSpec& grid() const override { return grid_; }
    BoundaryFunction apply(const BoundaryFunction& f) override;

    static uint64_t key_of(const BoundaryFunction& f);

private:
    DNDataset ds_;
    GridSpec grid_;
    std::unordered_map<uint64_t, int> index_;
};

/// Wraps another access and records every (f, Λf) pair once, in first-request
/// order; used by the dnmap command to persist a measurement campaign.
class RecordingDnAccess : public DnAccess {
public:
    explicit RecordingDnAccess(DnAccess& inner);
    const GridSpec& grid() const override { return inner_.grid(); }
    BoundaryFunction apply(const BoundaryFunction& f) override;

    DNDataset dataset(uint64_t grid_fp, uint64_t spec_fp);

private:
    DnAccess& inner_;
    std::mutex mu_;
    std::vector<DNRecord> records_;
    std::unordered_map<uint64_t, int> seen_;
};

}  // namespace fcald

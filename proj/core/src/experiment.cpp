#include "habcast/experiment.hpp"

#include <deque>
#include <stdexcept>

namespace habcast {

namespace {

void finish(ExperimentResult& result, const ExperimentOptions& options) {
    result.log.experiment_id = options.experiment_id;
    result.log.validate();
    for (const auto& r : result.log.records) {
        result.cold_starts += r.flags.cold_start ? 1 : 0;
        result.guarded_divisions += r.flags.guarded_division ? 1 : 0;
    }
    result.metrics = compute_metrics(result.log);
}

} // namespace

std::vector<std::string> transformed_feature_names(const FeatureTransform& transform,
                                                   const std::vector<std::string>& original) {
    if (!transform.pca) return original;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < transform.pca->k(); ++c) names.push_back("PC" + std::to_string(c + 1));
    return names;
}

ExperimentResult run_batch_experiment(const SplitParts& parts, const FeatureTransform& transform,
                                      const LearnerSpec& spec, int horizon, const ExperimentOptions& options) {
    (void)horizon; // rows already carry the horizon-shifted target
    Matrix x = transform.apply(parts.pretrain.feature_matrix());
    std::vector<double> y = parts.pretrain.targets();
    const Matrix train_x = transform.apply(parts.train.feature_matrix());
    for (std::size_t i = 0; i < train_x.rows(); ++i) {
        x.append_row(train_x.row(i));
        y.push_back(parts.train.rows[i].target);
    }
    auto learner = make_batch_learner(spec, options.seed);
    learner->fit(x, y);

    ExperimentResult result;
    const Matrix test_x = transform.apply(parts.test.feature_matrix());
    for (std::size_t i = 0; i < test_x.rows(); ++i) {
        const auto p = learner->predict(test_x.row(i));
        result.log.records.push_back({parts.test.rows[i].anchor_date, parts.test.rows[i].target, p.value, p.flags});
    }
    if (spec.family == ModelFamily::Dome) {
        const auto& dome = dynamic_cast<const DomeRegressor&>(*learner);
        const auto names = transformed_feature_names(transform, parts.test.feature_names);
        result.model_text = parts.test.target_name + " = " + to_equation(dome.result().tree, names);
    }
    finish(result, options);
    return result;
}

ExperimentResult run_stream_experiment(const SplitParts& parts, const FeatureTransform& transform,
                                       const LearnerSpec& spec, int horizon, const ExperimentOptions& options) {
    struct Item {
        const SupervisedRow* row;
        Phase phase;
    };
    std::vector<Item> items;
    for (const auto& r : parts.pretrain.rows) items.push_back({&r, Phase::Pretrain});
    for (const auto& r : parts.train.rows) items.push_back({&r, Phase::Train});
    for (const auto& r : parts.test.rows) items.push_back({&r, Phase::Test});

    auto learner = make_stream_learner(spec);
    ExperimentResult result;
    struct Pending {
        std::size_t index;
        Date release;
        std::vector<double> z;
    };
    std::deque<Pending> pending;
    const std::chrono::days delay{horizon};
    bool in_test = false;

    for (std::size_t t = 0; t < items.size(); ++t) {
        const auto& item = items[t];
        if (item.phase == Phase::Test && !in_test) {
            in_test = true;
            result.state_before_test = learner->state_hash();
        }
        auto z = transform.apply(item.row->features);
        const auto p = learner->predict(z);
        if (options.record_trace) result.trace.push_back({StreamEvent::Kind::Predict, t, item.phase});
        if (item.phase == Phase::Test) {
            result.log.records.push_back({item.row->anchor_date, item.row->target, p.value, p.flags});
        }
        pending.push_back({t, item.row->anchor_date + delay, std::move(z)});

        const bool learning = !in_test || options.test_update;
        while (!pending.empty() && pending.front().release <= item.row->anchor_date) {
            auto& ready = pending.front();
            if (learning) {
                learner->learn_one(ready.z, items[ready.index].row->target);
                if (options.record_trace) result.trace.push_back({StreamEvent::Kind::Learn, ready.index, item.phase});
            }
            pending.pop_front();
        }
    }
    if (in_test) result.state_after_test = learner->state_hash();
    finish(result, options);
    return result;
}

ExperimentResult run_experiment(const SplitParts& parts, const FeatureTransform& transform, const LearnerSpec& spec,
                                int horizon, const ExperimentOptions& options) {
    try {
        return paradigm_of(spec.family) == Paradigm::Batch
                   ? run_batch_experiment(parts, transform, spec, horizon, options)
                   : run_stream_experiment(parts, transform, spec, horizon, options);
    } catch (const std::exception& e) {
        throw std::runtime_error(options.experiment_id + ": " + e.what());
    }
}

} // namespace habcast

/*
 * synthstroke
 *
 * Copyright 2026 The synthstroke Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "synthstroke/commands.hpp"

using namespace synthstroke;

int main(int argc, char** argv)
{
    CLI::App app{"synthstroke: synthetic stroke MRI generation, evaluation and post-processing"};
    app.require_subcommand(1);

    // generate
    GenerateOptions gen;
    std::string gen_config, gen_healthy, gen_lesions, gen_real, gen_replay;
    auto* g = app.add_subcommand("generate", "Synthesize image/label pairs from healthy posteriors and lesion masks");
    g->add_option("--config", gen_config, "Generation config (JSON)")->check(CLI::ExistingFile);
    g->add_option("--healthy", gen_healthy, "Manifest of healthy posterior stacks (JSON Lines)");
    g->add_option("--lesions", gen_lesions, "Manifest of lesion masks (JSON Lines)");
    g->add_option("--real", gen_real, "Manifest of real images with labels; enables mixed sampling");
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_option("--seed", gen.seed, "Root seed");
    g->add_option("--count", gen.count, "Number of samples");
    g->add_option("--jobs", gen.jobs, "Worker threads")->check(CLI::PositiveNumber);
    g->add_option("--replay", gen_replay, "Regenerate the single sample described by a provenance record")
        ->check(CLI::ExistingFile);

    // eval
    EvalOptions ev;
    std::string ev_pairing, ev_hd = "pooled";
    std::int32_t ev_label = 0;
    auto* e = app.add_subcommand("eval", "Score predicted lesion masks against ground truth");
    e->add_option("pred_dir", ev.pred_dir, "Directory of predicted masks")->required()->check(CLI::ExistingDirectory);
    e->add_option("gt_dir", ev.gt_dir, "Directory of ground-truth masks")->required()->check(CLI::ExistingDirectory);
    e->add_option("--pairing", ev_pairing, "Pairing manifest (JSON Lines: case_id, pred, gt, modality)")
        ->check(CLI::ExistingFile);
    e->add_option("--out", ev.out, "Per-case metrics CSV")->required();
    e->add_option("--modality", ev.modality, "Modality written to the CSV when the pairing does not say");
    e->add_option("--hd95", ev_hd, "HD95 variant")->check(CLI::IsMember({"pooled", "max"}));
    auto* lv = e->add_option("--label-value", ev_label, "Foreground label value (default: any non-zero voxel)");
    e->add_option("--jobs", ev.jobs, "Worker threads")->check(CLI::PositiveNumber);

    // postproc
    PostprocOptions pp;
    std::vector<std::string> pp_inputs;
    auto* p = app.add_subcommand("postproc", "Merge, ensemble and clean up network outputs");
    p->add_option("--mode", pp.mode, "Operation")
        ->required()
        ->check(CLI::IsMember({"tta-merge", "ensemble", "pl", "upl", "entropy"}));
    p->add_option("inputs", pp_inputs, "Input stack manifests")->required()->check(CLI::ExistingFile);
    p->add_option("--out", pp.out, "Output manifest (.json) or volume (.nii.gz for entropy)")->required();
    p->add_option("--upl-threshold", pp.upl_threshold, "Uncertainty threshold for upl");

    // selftest
    SelftestOptions st;
    std::string st_corrupt;
    auto* s = app.add_subcommand("selftest", "Run the built-in oracle checks");
    s->add_flag("--quick", st.quick, "Smaller fixtures");
    s->add_option("--corrupt", st_corrupt, "Deliberately break one check's fixture")
        ->check(CLI::IsMember(selftest_checks()));

    CLI11_PARSE(app, argc, argv);

    if (g->parsed()) {
        if (!gen_config.empty())
            gen.config = gen_config;
        if (!gen_healthy.empty())
            gen.healthy = gen_healthy;
        if (!gen_lesions.empty())
            gen.lesions = gen_lesions;
        if (!gen_real.empty())
            gen.real = gen_real;
        if (!gen_replay.empty())
            gen.replay = gen_replay;
        return cmd_generate(gen, std::cerr);
    }
    if (e->parsed()) {
        if (!ev_pairing.empty())
            ev.pairing = ev_pairing;
        ev.hd_mode = ev_hd == "max" ? HausdorffMode::max_of_sides : HausdorffMode::pooled;
        if (lv->count())
            ev.label_value = ev_label;
        return cmd_eval(ev, std::cerr);
    }
    if (p->parsed()) {
        for (const auto& i : pp_inputs)
            pp.inputs.emplace_back(i);
        return cmd_postproc(pp, std::cerr);
    }
    if (!st_corrupt.empty())
        st.corrupt = st_corrupt;
    return cmd_selftest(st, std::cout, std::cerr);
}

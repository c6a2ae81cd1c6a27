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
#pragma once

/*
 * Channel stacks on disk: one NIfTI file per channel plus a JSON manifest
 *
 *   {"kind": "logits", "channels": [{"name": "bg", "file": "x_bg.nii.gz"}, ...],
 *    "metadata": {...}}
 *
 * Channel files are resolved relative to the manifest's directory.
 */

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "synthstroke/nifti.hpp"
#include "synthstroke/postproc.hpp"
#include "synthstroke/volume.hpp"

namespace synthstroke {

template <class Tag>
struct StackFile
{
    ChannelStack<Tag> stack;
    std::string kind;
    nlohmann::json metadata = nlohmann::json::object();
};

namespace stack_io_detail {

inline std::string stem_of(const std::filesystem::path& manifest)
{
    std::string s = manifest.filename().string();
    if (s.size() > 5 && s.compare(s.size() - 5, 5, ".json") == 0)
        s.resize(s.size() - 5);
    return s;
}

inline nlohmann::json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + " is not valid JSON: " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out)
        throw Error("write failed: " + path.string());
}

struct ChannelEntry
{
    std::string name;
    std::filesystem::path file;
};

inline std::vector<ChannelEntry> channel_entries(const nlohmann::json& j, const std::filesystem::path& manifest)
{
    if (!j.contains("channels") || !j["channels"].is_array() || j["channels"].empty())
        throw Error(manifest.string() + ": stack manifest needs a non-empty 'channels' array");
    std::vector<ChannelEntry> out;
    for (const auto& c : j["channels"]) {
        if (!c.contains("name") || !c.contains("file"))
            throw Error(manifest.string() + ": every channel needs 'name' and 'file'");
        std::filesystem::path f = c["file"].get<std::string>();
        if (f.is_relative())
            f = manifest.parent_path() / f;
        out.push_back({c["name"].get<std::string>(), f});
    }
    return out;
}

} // namespace stack_io_detail

template <class Tag>
StackFile<Tag> read_stack(const std::filesystem::path& manifest)
{
    const nlohmann::json j = stack_io_detail::read_json(manifest);
    StackFile<Tag> out;
    out.kind = j.value("kind", "");
    if (j.contains("metadata"))
        out.metadata = j["metadata"];
    std::vector<std::string> names;
    std::vector<Volume> ch;
    for (const auto& e : stack_io_detail::channel_entries(j, manifest)) {
        names.push_back(e.name);
        ch.push_back(read_nifti<float>(e.file).image);
    }
    out.stack = ChannelStack<Tag>(std::move(names), std::move(ch));
    return out;
}

/// Writes `<stem>_<channel>.nii.gz` next to the manifest.
template <class Tag>
void write_stack(const ChannelStack<Tag>& stack, const std::filesystem::path& manifest, const std::string& kind,
                 const nlohmann::json& metadata = nlohmann::json::object())
{
    const std::string stem = stack_io_detail::stem_of(manifest);
    nlohmann::json channels = nlohmann::json::array();
    for (std::size_t c = 0; c < stack.size(); ++c) {
        const std::string file = stem + "_" + stack.names()[c] + ".nii.gz";
        write_nifti(stack[c], manifest.parent_path() / file);
        channels.push_back({{"name", stack.names()[c]}, {"file", file}});
    }
    stack_io_detail::write_json(manifest, {{"kind", kind}, {"channels", channels}, {"metadata", metadata}});
}

/// Pseudo-label masks as uint8 channels; threshold and validity go to metadata.
inline void write_pseudo_label(const PseudoLabel& pl, const std::filesystem::path& manifest,
                               nlohmann::json metadata = nlohmann::json::object())
{
    const std::string stem = stack_io_detail::stem_of(manifest);
    nlohmann::json channels = nlohmann::json::array();
    for (std::size_t c = 0; c < pl.masks.size(); ++c) {
        const std::string file = stem + "_" + pl.names[c] + ".nii.gz";
        write_nifti(pl.masks[c], manifest.parent_path() / file, NiftiDatatype::uint8);
        channels.push_back({{"name", pl.names[c]}, {"file", file}});
    }
    metadata["threshold"] = pl.threshold;
    metadata["valid"] = pl.valid;
    stack_io_detail::write_json(manifest, {{"kind", "pseudo_label"}, {"channels", channels}, {"metadata", metadata}});
}

inline PseudoLabel read_pseudo_label(const std::filesystem::path& manifest)
{
    const nlohmann::json j = stack_io_detail::read_json(manifest);
    PseudoLabel pl;
    for (const auto& e : stack_io_detail::channel_entries(j, manifest)) {
        pl.names.push_back(e.name);
        pl.masks.push_back(binarize(read_nifti<std::uint8_t>(e.file).image));
    }
    const auto md = j.value("metadata", nlohmann::json::object());
    pl.threshold = md.value("threshold", 0.0);
    pl.valid = md.value("valid", std::vector<bool>{});
    if (pl.valid.size() != pl.masks.size()) {
        pl.valid.clear();
        for (const auto& m : pl.masks)
            pl.valid.push_back(count_nonzero(m) > 0);
    }
    return pl;
}

} // namespace synthstroke

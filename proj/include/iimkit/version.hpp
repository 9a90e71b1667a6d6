// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the iimkit project.

#pragma once

namespace iim {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "iimkit";

} // namespace iim

// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/camera.hpp"

#include <set>

namespace slidesplat {

void CameraRig::validate() const {
    require(!cameras.empty(), ErrorKind::ConfigError, "camera rig is empty");
    require(ids.size() == cameras.size(), ErrorKind::ConfigError, "camera id count mismatch");
    std::set<std::string> unique(ids.begin(), ids.end());
    require(unique.size() == ids.size(), ErrorKind::ConfigError, "duplicate camera ids");
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        require(is_valid_pose(cameras[i].pose), ErrorKind::ConfigError,
                "camera '" + ids[i] + "' pose is not a rigid transform");
        require(cameras[i].width > 0 && cameras[i].height > 0, ErrorKind::ConfigError,
                "camera '" + ids[i] + "' has empty resolution");
    }
}

std::size_t CameraRig::index_of(const std::string &id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == id) return i;
    throw Error(ErrorKind::ConfigError, "unknown camera id '" + id + "'");
}

} // namespace slidesplat

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "clearing/errors.hpp"
#include "clearing/stabilize.hpp"

namespace clearing {

CameraModel CameraModel::covering(double near_m, double far_m, double height_m, int image_width, int image_height,
                                  double margin) {
    if (!(near_m >= 0.0 && far_m > near_m && height_m > 0.0)) {
        throw std::invalid_argument("camera window must satisfy 0 <= near < far and height > 0");
    }
    const double a_near = std::atan(near_m / height_m);
    const double a_far = std::atan(far_m / height_m);
    const double pad = margin * (a_far - a_near);
    const double lo = a_near - pad;
    const double hi = a_far + pad;
    CameraModel cam;
    cam.height_m = height_m;
    cam.tilt_rad = std::max(0.0, 0.5 * (lo + hi));
    cam.image_width = image_width;
    cam.image_height = image_height;
    cam.cy = 0.5 * image_height;
    cam.cx = 0.5 * image_width;
    cam.fy = cam.cy / std::tan(std::max(hi - cam.tilt_rad, cam.tilt_rad - lo));
    cam.fx = cam.fy;
    validate(cam);
    return cam;
}

void validate(const CameraModel& cam) {
    if (!(cam.height_m > 0.0)) throw std::invalid_argument("camera height must be > 0");
    if (!(cam.tilt_rad >= 0.0 && cam.tilt_rad < M_PI / 2)) throw std::invalid_argument("camera tilt must be in [0, pi/2)");
    if (!(cam.fx > 0.0 && cam.fy > 0.0)) throw std::invalid_argument("focal lengths must be > 0");
    if (cam.image_width <= 0 || cam.image_height <= 0) throw std::invalid_argument("image size must be positive");
}

double forward_offset(double v_px, const CameraModel& cam) {
    const double angle = cam.tilt_rad + std::atan((cam.cy - v_px) / cam.fy);
    if (!(angle < M_PI / 2)) throw NoGroundIntersectionError("ray through image row does not reach the ground");
    return cam.height_m * std::tan(angle);
}

double image_row_for_offset(double offset_m, const CameraModel& cam) {
    const double angle = std::atan(offset_m / cam.height_m);
    return cam.cy - cam.fy * std::tan(angle - cam.tilt_rad);
}

OdometrySample interpolate_odometry(std::span<const OdometrySample> stream, double t) {
    if (stream.empty()) throw std::invalid_argument("odometry stream is empty");
    if (t <= stream.front().t_seconds) return {t, stream.front().x_m, stream.front().v_mps};
    if (t >= stream.back().t_seconds) return {t, stream.back().x_m, stream.back().v_mps};
    auto hi = std::lower_bound(stream.begin(), stream.end(), t,
                               [](const OdometrySample& s, double value) { return s.t_seconds < value; });
    if (hi->t_seconds == t) return *hi;
    auto lo = hi - 1;
    const double f = (t - lo->t_seconds) / (hi->t_seconds - lo->t_seconds);
    return {t, lo->x_m + f * (hi->x_m - lo->x_m), lo->v_mps};
}

double project_detection(const Detection& det, const CameraModel& cam, const OdometrySample& odo) {
    const double u = det.bbox.center_x();
    const double v = det.bbox.center_y();
    if (!(u >= 0.0 && v >= 0.0 && u <= cam.image_width && v <= cam.image_height)) {
        throw std::invalid_argument("bbox centre lies outside the image");
    }
    return odo.x_m + forward_offset(v, cam);
}

}  // namespace clearing

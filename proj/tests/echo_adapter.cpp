// Test adapter speaking the NDJSON scoring protocol.
//   echo      1.0 when candidate == reference, else 0.0
//   overshoot 1.3 (out of range on purpose)
//   negative  -0.2
// Flags: --metrics a,b  --version N  --silent  --hello-error MSG  --crash-after N
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

using nlohmann::json;

int main(int argc, char **argv) {
    std::vector<std::string> metrics{"echo", "overshoot", "negative"};
    int version = 1;
    bool silent = false;
    std::string hello_error;
    long crash_after = -1;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        auto next = [&]() -> std::string { return i + 1 < argc ? argv[++i] : ""; };
        if (a == "--metrics") {
            metrics.clear();
            std::stringstream ss(next());
            for (std::string m; std::getline(ss, m, ',');)
                if (!m.empty()) metrics.push_back(m);
        } else if (a == "--version") {
            version = std::atoi(next().c_str());
        } else if (a == "--silent") {
            silent = true;
        } else if (a == "--hello-error") {
            hello_error = next();
        } else if (a == "--crash-after") {
            crash_after = std::atol(next().c_str());
        }
    }
    if (silent) {
        std::this_thread::sleep_for(std::chrono::seconds(30));
        return 0;
    }
    json hello = {{"op", "hello"}, {"metrics", metrics}, {"version", version}};
    if (!hello_error.empty()) hello["error"] = hello_error;
    std::cout << hello.dump() << std::endl;

    long served = 0;
    for (std::string line; std::getline(std::cin, line);) {
        if (line.empty()) continue;
        if (crash_after >= 0 && served >= crash_after) std::_Exit(3);
        json req;
        try {
            req = json::parse(line);
            if (!req.is_object() || !req.contains("id")) throw std::runtime_error("no id");
        } catch (const std::exception &) {
            std::cout << json{{"id", -1}, {"error", "malformed request"}}.dump() << std::endl;
            continue;
        }
        ++served;
        const auto id = req["id"];
        const std::string metric = req.value("metric", "");
        json reply = {{"id", id}};
        if (metric == "echo")
            reply["score"] = req.value("candidate", "") == req.value("reference", "") ? 1.0 : 0.0;
        else if (metric == "overshoot")
            reply["score"] = 1.3;
        else if (metric == "negative")
            reply["score"] = -0.2;
        else
            reply["error"] = "unknown metric '" + metric + "'";
        std::cout << reply.dump() << std::endl;
    }
    return 0;
}

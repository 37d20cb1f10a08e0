/** CLI entry point: start one bridge, or both on consecutive ports. */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { createDetectApp } from "./detectAdapter";
import { createGenerateApp } from "./genAdapter";

export interface MainConfig {
  role: "generate" | "detect" | "both";
  port: number;
  upstream: string;
}

export function parseArgs(argv: string[]): MainConfig {
  const args = yargs(argv)
    .option("role", {
      choices: ["generate", "detect", "both"] as const,
      default: "both" as const,
      describe: "which wire protocol to serve",
    })
    .option("port", {
      type: "number",
      default: 8188,
      describe: "listen port (detect uses port+1 when role is 'both')",
    })
    .option("upstream", {
      type: "string",
      default: process.env.UPSTREAM_URL ?? "http://127.0.0.1:9000",
      describe: "base URL of the upstream model server",
    })
    .strict()
    .parseSync();
  return { role: args.role, port: args.port, upstream: args.upstream };
}

export function main(argv: string[]): void {
  const config = parseArgs(argv);
  const options = { upstreamUrl: config.upstream };
  if (config.role === "generate" || config.role === "both") {
    createGenerateApp(options).listen(config.port, () => {
      console.log(`generate bridge on :${config.port} -> ${config.upstream}`);
    });
  }
  if (config.role === "detect" || config.role === "both") {
    const port = config.role === "both" ? config.port + 1 : config.port;
    createDetectApp(options).listen(port, () => {
      console.log(`detect bridge on :${port} -> ${config.upstream}`);
    });
  }
}

if (require.main === module) {
  main(hideBin(process.argv));
}

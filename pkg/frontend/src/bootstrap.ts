import { initConsole } from "./main";

initConsole(document);
